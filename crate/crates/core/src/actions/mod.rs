//! Action-angle data of the integrable flows: singular leaves, torus
//! families, actions, frequencies, the slope density and `lambda(A)`.
//!
//! Charts are parametrized internally by the Clairaut value `c = p_theta`;
//! the public parameter `sigma` is the action `p1 = P c` (with `P` the
//! `theta`-period), or the direction angle on the flat torus.

pub mod assumptions;
pub mod charts;
pub mod lambda;
pub mod periods;
pub mod singular;
pub mod typel;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{HamiltonianModel, SurfaceKind, SurfaceModel};
use crate::quad::QuadTol;

pub use assumptions::{check_a2, check_a3_a4, A2Report, A2Sample, A3A4Report};
pub use charts::{Boundary, ChartPoint, LeafChart, Level, Regime};
pub use lambda::{ChartContribution, LambdaReport, TailStep};
pub use periods::{Geom, Torus};
pub use singular::{classify, Radial, SingularLeaf, Stability};
pub use typel::{typel_fit, typel_fit_data, TypeLFit};

/// Total mass of the angle measure `|dtheta|` on `(R/Z)^2`. Frequencies are
/// in cycles per unit time, so the Haar probability measure is the one that
/// reproduces the flat-torus slope `2 pi`.
pub const HAAR_MASS: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActionTol {
    /// Absolute accuracy of the period integrals.
    pub quad: f64,
    /// Relative accuracy of `lambda`.
    pub lambda_rel: f64,
    /// Allowed relative gap between the two frequency routes.
    pub route_rel: f64,
    /// Endpoint tail target relative to `lambda`.
    pub tail_rel: f64,
}

impl Default for ActionTol {
    fn default() -> Self {
        Self { quad: 1e-10, lambda_rel: 1e-3, route_rel: 1e-6, tail_rel: 1e-4 }
    }
}

impl ActionTol {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("quad", self.quad),
            ("lambda_rel", self.lambda_rel),
            ("route_rel", self.route_rel),
            ("tail_rel", self.tail_rel),
        ] {
            if !(v.is_finite() && v > 0.0 && v < 1.0) {
                return Err(Error::Config(format!("actions.{name} = {v} must lie in (0, 1)")));
            }
        }
        Ok(())
    }
}

/// Actions and frequencies of one torus.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ActionData {
    pub p1: f64,
    pub p2: f64,
    pub nu: [f64; 2],
    pub dnu_dsigma: [f64; 2],
}

/// The action-angle picture of one `(surface, H)` pair at its energy.
#[derive(Clone, Debug)]
pub struct Actions {
    surface: SurfaceModel,
    ham: HamiltonianModel,
    tol: ActionTol,
    nodes: Vec<f64>,
    singular: Vec<SingularLeaf>,
    charts: Vec<LeafChart>,
}

impl Actions {
    pub fn new(surface: &SurfaceModel, ham: &HamiltonianModel, tol: ActionTol) -> Result<Self> {
        tol.validate()?;
        let radial = Radial::new(surface, ham);
        if radial.is_flat() && surface.kind() != SurfaceKind::FlatTorus {
            return Err(Error::Unsupported("torus of revolution with constant profile; use the flat torus".into()));
        }
        let singular = classify(&radial)?;
        let nodes = charts::nodes(&radial)?;
        let charts = charts::enumerate(&radial)?;
        Ok(Self { surface: surface.clone(), ham: ham.clone(), tol, nodes, singular, charts })
    }

    pub fn surface(&self) -> &SurfaceModel {
        &self.surface
    }

    pub fn hamiltonian(&self) -> &HamiltonianModel {
        &self.ham
    }

    pub fn tol(&self) -> &ActionTol {
        &self.tol
    }

    pub fn radial(&self) -> Radial<'_> {
        Radial::new(&self.surface, &self.ham)
    }

    pub fn singular_set(&self) -> &[SingularLeaf] {
        &self.singular
    }

    pub fn charts(&self) -> &[LeafChart] {
        &self.charts
    }

    pub fn chart(&self, id: usize) -> Result<&LeafChart> {
        self.charts.get(id).ok_or_else(|| Error::InvalidInput(format!("no chart with id {id}")))
    }

    /// All critical points of the radial function.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// `theta`-period `P`; `p1 = P c`.
    pub fn theta_period(&self) -> f64 {
        self.surface.theta_period()
    }

    /// Momentum radius `sqrt(2 (E - V))` on the flat chart.
    pub(crate) fn flat_radius(&self) -> f64 {
        (2.0 * (self.ham.energy() - self.ham.potential().eval(0.0))).sqrt()
    }

    /// Chart parameter interval `(sigma_min, sigma_max)`.
    pub fn sigma_range(&self, chart: &LeafChart) -> (f64, f64) {
        if chart.regime == Regime::Flat {
            return (0.0, std::f64::consts::TAU);
        }
        let (a, b) = chart.c_range();
        (self.theta_period() * a, self.theta_period() * b)
    }

    pub(crate) fn point(&self, chart: &LeafChart, sigma: f64) -> Result<ChartPoint> {
        let c = sigma / self.theta_period();
        if !chart.contains(c) {
            return Err(Error::InvalidInput(format!("sigma = {sigma} is not interior to chart {}", chart.id)));
        }
        Ok(ChartPoint::from_kappa(chart, c.abs()))
    }

    pub(crate) fn period_tol(&self) -> QuadTol {
        QuadTol { abs: 1e-3 * self.tol.quad, rel: 1e-12, max_intervals: 4000 }
    }
}
