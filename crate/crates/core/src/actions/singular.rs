//! The radial function `q(s) = 2 (E - V(s)) a(s)^2` and its critical points.
//!
//! At Clairaut value `c` the `s`-motion has `p_s^2 = (q(s) - c^2) / a(s)^2`,
//! so critical points of `q` with `q > 0` are exactly the relative
//! equilibria (critical circles of the moment map).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{HamiltonianModel, SurfaceKind, SurfaceModel};
use crate::quad::brent;

/// The `s`-dynamics at a fixed energy.
#[derive(Clone, Debug)]
pub struct Radial<'a> {
    pub surface: &'a SurfaceModel,
    pub ham: &'a HamiltonianModel,
    pub energy: f64,
}

impl<'a> Radial<'a> {
    pub fn new(surface: &'a SurfaceModel, ham: &'a HamiltonianModel) -> Self {
        Self { surface, ham, energy: ham.energy() }
    }

    pub fn with_energy(&self, energy: f64) -> Self {
        Self { energy, ..self.clone() }
    }

    pub fn length(&self) -> f64 {
        self.surface.length()
    }

    pub fn a(&self, s: f64) -> f64 {
        self.surface.profile().eval(s)
    }

    pub fn q(&self, s: f64) -> f64 {
        let a = self.a(s);
        2.0 * (self.energy - self.ham.v(s)) * a * a
    }

    /// `q, q', q''`.
    pub fn q_derivs(&self, s: f64) -> [f64; 3] {
        let [a, a1, a2, _] = self.surface.a_derivs(s);
        let [v, v1, v2, _] = self.ham.v_derivs(s);
        let k = self.energy - v;
        [
            2.0 * k * a * a,
            2.0 * (-v1 * a * a + 2.0 * k * a * a1),
            2.0 * (-v2 * a * a - 4.0 * v1 * a * a1 + 2.0 * k * (a1 * a1 + a * a2)),
        ]
    }

    /// `q(s + d) - q(s)` without cancellation.
    pub fn dq(&self, s: f64, d: f64) -> f64 {
        let a0 = self.a(s);
        let da = self.surface.profile().diff(s, d);
        let a1 = a0 + da;
        let dv = match self.ham.kind() {
            crate::geometry::HamiltonianKind::Geodesic => 0.0,
            crate::geometry::HamiltonianKind::Schrodinger => self.ham.potential().diff(s, d),
        };
        let k0 = self.energy - self.ham.v(s);
        2.0 * (-dv * a1 * a1 + k0 * da * (a1 + a0))
    }

    /// `q` does not depend on `s` (flat dynamics, no singular leaves).
    pub fn is_flat(&self) -> bool {
        self.surface.profile().is_constant()
            && (self.ham.kind() == crate::geometry::HamiltonianKind::Geodesic || self.ham.potential().is_constant())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Elliptic,
    Hyperbolic,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SingularLeaf {
    pub s_crit: f64,
    pub stability: Stability,
    /// `|p_theta|` on the critical circle, `sqrt(q(s_crit))`.
    pub clairaut_value: f64,
    /// `q''(s_crit)`.
    pub curvature: f64,
}

/// Relative threshold on `|q''|` (against `max |q'| / L`) below which a
/// critical point is declared degenerate.
const MORSE_TOL: f64 = 1e-6;

/// All zeros of `q'` on the domain, sorted by `s`, with `[q, q', q'']`.
/// Degenerate zeros with `q > 0` raise `MorseViolation`.
pub fn critical_points(radial: &Radial) -> Result<Vec<(f64, [f64; 3])>> {
    if radial.is_flat() {
        return Ok(Vec::new());
    }
    let l = radial.length();
    let sphere = radial.surface.kind() == SurfaceKind::RevolutionSphere;
    let deg = radial.surface.profile().degree() * 2 + radial.ham.potential().degree() + 1;
    let n = 512 * deg;
    let (lo, hi) = if sphere { (1e-6 * l, l - 1e-6 * l) } else { (0.0, l) };
    let h = (hi - lo) / n as f64;
    let grid: Vec<f64> = (0..=n).map(|i| lo + i as f64 * h).collect();
    let d1: Vec<f64> = grid.iter().map(|&s| radial.q_derivs(s)[1]).collect();
    let scale = d1.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let dq = |s: f64| radial.q_derivs(s)[1];
    let mut found: Vec<f64> = Vec::new();
    for i in 0..n {
        let (f0, f1) = (d1[i], d1[i + 1]);
        if f0 == 0.0 {
            found.push(grid[i]);
        } else if f0.signum() != f1.signum() && f1 != 0.0 {
            if let Some(r) = brent(dq, grid[i], grid[i + 1], 1e-15 * l) {
                found.push(r);
            }
        }
    }
    // Tangential zeros of q' (no sign change) are degenerate by definition.
    for i in 1..n {
        let (fm, f0, fp) = (d1[i - 1].abs(), d1[i].abs(), d1[i + 1].abs());
        if f0 <= fm && f0 <= fp && f0 < 1e-3 * scale && d1[i - 1].signum() == d1[i + 1].signum() {
            let s = golden_min(|s| dq(s).abs(), grid[i - 1], grid[i + 1]);
            if dq(s).abs() < 1e-9 * scale && radial.q(s) > 0.0 {
                return Err(Error::MorseViolation { s, second: radial.q_derivs(s)[2] });
            }
        }
    }
    if !sphere {
        found.retain(|&s| s < l);
    }
    found.sort_by(f64::total_cmp);
    found.dedup_by(|a, b| (*a - *b).abs() < 1e-9 * l);
    let mut out = Vec::new();
    for s in found {
        let d = radial.q_derivs(s);
        if d[0] > 0.0 && d[2].abs() < MORSE_TOL * scale / l {
            return Err(Error::MorseViolation { s, second: d[2] });
        }
        out.push((s, d));
    }
    Ok(out)
}

/// All critical points of `q` with `q > 0`, sorted by `s`.
pub fn classify(radial: &Radial) -> Result<Vec<SingularLeaf>> {
    Ok(critical_points(radial)?
        .into_iter()
        .filter(|(_, d)| d[0] > 0.0)
        .map(|(s, [q, _, q2])| SingularLeaf {
            s_crit: s,
            stability: if q2 < 0.0 { Stability::Elliptic } else { Stability::Hyperbolic },
            clairaut_value: q.sqrt(),
            curvature: q2,
        })
        .collect())
}

fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() < 1e-15 * (1.0 + a.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trig::TrigPoly;
    use std::f64::consts::{PI, TAU};

    fn torus(cos: Vec<f64>) -> SurfaceModel {
        SurfaceModel::revolution_torus(TrigPoly::new(cos, vec![], 1.0).unwrap(), TAU).unwrap()
    }

    #[test]
    fn torus_has_elliptic_outer_and_hyperbolic_inner_equator() {
        let s = torus(vec![2.0, 1.0]);
        let h = HamiltonianModel::geodesic(0.5).unwrap();
        let leaves = classify(&Radial::new(&s, &h)).unwrap();
        assert_eq!(leaves.len(), 2);
        assert!(leaves[0].s_crit.abs() < 1e-10 && leaves[0].stability == Stability::Elliptic);
        assert!((leaves[1].s_crit - PI).abs() < 1e-10 && leaves[1].stability == Stability::Hyperbolic);
        assert!((leaves[0].clairaut_value - 3.0).abs() < 1e-12);
        assert!((leaves[1].clairaut_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn linearization_sign_agrees_with_tag() {
        // Oracle: the s-motion at c = sqrt(q(s*)) linearizes to
        // delta'' = (q''/(2 a^2)) delta; elliptic iff that coefficient < 0.
        let s = torus(vec![2.0, 1.0]);
        let h = HamiltonianModel::geodesic(0.5).unwrap();
        let r = Radial::new(&s, &h);
        for leaf in classify(&r).unwrap() {
            let d = 1e-5;
            let c2 = r.q(leaf.s_crit);
            let f = |x: f64| 0.5 * (r.q(x) - c2) / (r.a(x) * r.a(x));
            let k = (f(leaf.s_crit + d) - 2.0 * f(leaf.s_crit) + f(leaf.s_crit - d)) / (d * d);
            assert_eq!(k < 0.0, leaf.stability == Stability::Elliptic);
        }
    }

    #[test]
    fn round_sphere_has_single_elliptic_equator() {
        let s = SurfaceModel::revolution_sphere(TrigPoly::new(vec![], vec![0.0, 1.0], 1.0).unwrap(), PI).unwrap();
        let h = HamiltonianModel::geodesic(0.5).unwrap();
        let leaves = classify(&Radial::new(&s, &h)).unwrap();
        assert_eq!(leaves.len(), 1);
        assert!((leaves[0].s_crit - PI / 2.0).abs() < 1e-10);
        assert_eq!(leaves[0].stability, Stability::Elliptic);
    }

    #[test]
    fn flat_spot_is_rejected() {
        // a = 2 + cos^3 s has a' = -3 cos^2 s sin s, degenerate at pi/2.
        let s = torus(vec![2.0, 0.75, 0.0, 0.25]);
        let h = HamiltonianModel::geodesic(0.5).unwrap();
        assert!(matches!(classify(&Radial::new(&s, &h)), Err(Error::MorseViolation { .. })));
    }

    #[test]
    fn difference_of_q_is_accurate() {
        let s = torus(vec![2.0, 1.0, 0.3]);
        let v = TrigPoly::new(vec![0.0, 0.1], vec![0.0, 0.05], 1.0).unwrap();
        let h = HamiltonianModel::schrodinger(v, 1.0, &s).unwrap();
        let r = Radial::new(&s, &h);
        let x = 0.8;
        for d in [0.3, 1e-3, 1e-9] {
            let direct = r.q(x + d) - r.q(x);
            let approx = r.dq(x, d);
            assert!((direct - approx).abs() < 1e-13 + 1e-6 * direct.abs(), "{d}");
        }
        let d = 1e-13;
        assert!((r.dq(x, d) / d - r.q_derivs(x)[1]).abs() < 1e-8);
    }
}
