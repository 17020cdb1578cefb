#![allow(dead_code)]

use std::f64::consts::{PI, TAU};

use frontwave::geometry::{HamiltonianModel, SurfaceModel, SurfacePoint};
use frontwave::trig::TrigPoly;

/// `a(s) = 2 + cos s`, `L = 2 pi`.
pub fn torus() -> SurfaceModel {
    SurfaceModel::revolution_torus(TrigPoly::new(vec![2.0, 1.0], vec![], 1.0).unwrap(), TAU).unwrap()
}

/// `a(s) = sin s`, `L = pi`.
pub fn round_sphere() -> SurfaceModel {
    SurfaceModel::revolution_sphere(TrigPoly::new(vec![], vec![0.0, 1.0], 1.0).unwrap(), PI).unwrap()
}

/// `a(s) = sin s (1 + 0.3 sin^2 s)`.
pub fn bumpy_sphere() -> SurfaceModel {
    SurfaceModel::revolution_sphere(TrigPoly::new(vec![], vec![0.0, 1.225, 0.0, -0.075], 1.0).unwrap(), PI).unwrap()
}

pub fn geodesic() -> HamiltonianModel {
    HamiltonianModel::geodesic(0.5).unwrap()
}

pub fn torus_point() -> SurfacePoint {
    SurfacePoint::new(0.0, PI / 2.0)
}
