//! Detectors for the nondegeneracy assumptions on the frequency map (A2)
//! and on the source point (A3, A4).

use std::f64::consts::{PI, TAU};

use serde::Serialize;

use super::charts::{ChartPoint, LeafChart, Regime};
use super::singular::Stability;
use super::Actions;
use crate::error::Result;
use crate::geometry::SurfacePoint;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct A2Sample {
    /// Normalized chart position in `(0, 1)`.
    pub u: f64,
    /// Smallest independent derivative orders, if any.
    pub orders: Option<(u8, u8)>,
    /// `|det(nu^(k), nu^(l))| / |nu|^2` at the reported pair (or the
    /// largest over all pairs on failure).
    pub det: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct A2Report {
    pub chart_id: usize,
    pub samples: Vec<A2Sample>,
    pub pass: bool,
}

/// Relative threshold on the derivative determinant.
const A2_THRESHOLD: f64 = 1e-4;

/// Check that two of the derivatives `nu', ..., nu''''` along the chart are
/// linearly independent at `n_samples` interior points.
pub fn check_a2(actions: &Actions, chart: &LeafChart, n_samples: usize) -> Result<A2Report> {
    let nu = |u: f64| -> Result<[f64; 2]> {
        if chart.regime == Regime::Flat {
            let w = TAU * u;
            let r = actions.flat_radius();
            return Ok([r * w.cos(), r * w.sin()]);
        }
        let pt = ChartPoint::from_kappa(chart, chart.kappa_lo + u * chart.width());
        actions.nu_at(chart, pt)
    };
    let h = 0.01;
    let mut samples = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let u = 0.05 + 0.9 * (i as f64 + 0.5) / n_samples as f64;
        let f: Vec<[f64; 2]> = (-3..=3).map(|k| nu(u + k as f64 * h)).collect::<Result<_>>()?;
        let g = |k: i32| f[(k + 3) as usize];
        let comb = |w: &[(i32, f64)], div: f64| -> [f64; 2] {
            let mut o = [0.0; 2];
            for &(k, c) in w {
                o[0] += c * g(k)[0];
                o[1] += c * g(k)[1];
            }
            [o[0] / div, o[1] / div]
        };
        let d = [
            comb(&[(-2, 1.0), (-1, -8.0), (1, 8.0), (2, -1.0)], 12.0 * h),
            comb(&[(-2, -1.0), (-1, 16.0), (0, -30.0), (1, 16.0), (2, -1.0)], 12.0 * h * h),
            comb(&[(-3, 1.0), (-2, -8.0), (-1, 13.0), (1, -13.0), (2, 8.0), (3, -1.0)], 8.0 * h.powi(3)),
            comb(&[(-3, -1.0), (-2, 12.0), (-1, -39.0), (0, 56.0), (1, -39.0), (2, 12.0), (3, -1.0)], 6.0 * h.powi(4)),
        ];
        let n0 = g(0)[0].hypot(g(0)[1]);
        let mut best = 0.0f64;
        let mut orders = None;
        'outer: for k in 0..4 {
            for l in k + 1..4 {
                let det = (d[k][0] * d[l][1] - d[k][1] * d[l][0]).abs() / (n0 * n0);
                best = best.max(det);
                if det > A2_THRESHOLD {
                    orders = Some((k as u8 + 1, l as u8 + 1));
                    best = det;
                    break 'outer;
                }
            }
        }
        samples.push(A2Sample { u, orders, det: best });
    }
    let pass = samples.iter().all(|s| s.orders.is_some());
    Ok(A2Report { chart_id: chart.id, samples, pass })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct A3A4Report {
    /// Directions `omega` whose covector lies on a singular leaf.
    pub z_hits: Vec<f64>,
    /// Critical points of `omega -> sigma`.
    pub criticals: Vec<f64>,
    pub finite: bool,
    /// Set when `A` is a pole (all directions share `p_theta = 0`).
    pub failure: Option<String>,
}

/// Exceptional directions at `A`: hits of the singular leaves and critical
/// points of the map from directions to leaves.
pub fn check_a3_a4(actions: &Actions, a: SurfacePoint) -> Result<A3A4Report> {
    let surface = actions.surface();
    if surface.near_pole(a.s) {
        return Ok(A3A4Report {
            z_hits: Vec::new(),
            criticals: Vec::new(),
            finite: false,
            failure: Some("A is a pole: p_theta = 0 for every direction, the front is periodic".into()),
        });
    }
    if actions.charts().iter().any(|c| c.regime == Regime::Flat) {
        return Ok(A3A4Report { z_hits: Vec::new(), criticals: Vec::new(), finite: true, failure: None });
    }
    let h = actions.hamiltonian().fiber(surface, a)?.clairaut_max();
    let mut values: Vec<f64> = actions
        .singular_set()
        .iter()
        .filter(|l| l.stability == Stability::Hyperbolic)
        .map(|l| l.clairaut_value)
        .collect();
    if surface.is_sphere() {
        values.push(0.0);
    }
    let mut hits = Vec::new();
    for v in values {
        if v >= h {
            continue;
        }
        // h cos(omega) = +-v
        let w = (v / h).acos();
        hits.extend([w, TAU - w, PI - w, PI + w]);
    }
    hits.sort_by(f64::total_cmp);
    hits.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
    Ok(A3A4Report { z_hits: hits, criticals: vec![0.0, PI], finite: true, failure: None })
}
