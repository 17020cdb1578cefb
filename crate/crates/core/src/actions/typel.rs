//! Logarithmic shape of the second action near a hyperbolic end:
//! `p2(x) = phi(x) log x + psi(x)` with `phi(0) = 0`.

use serde::Serialize;

use super::charts::{Boundary, ChartPoint, LeafChart};
use super::Actions;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TypeLFit {
    /// Coefficient of `x log x`, i.e. `phi'(0)`.
    pub phi1: f64,
    /// Coefficient of `x`.
    pub c2: f64,
    /// Boundary value `psi(0)`.
    pub psi0: f64,
    /// Sup-norm misfit.
    pub residual: f64,
    /// `max y - min y` over the data.
    pub range: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// Least-squares fit of `c1 x log x + c2 x + c3` (Householder QR on the
/// column-scaled design matrix).
pub fn typel_fit_data(x: &[f64], y: &[f64]) -> Result<TypeLFit> {
    let n = x.len();
    if n < 4 || y.len() != n {
        return Err(Error::FitDegenerate(format!("need at least 4 matching samples, got {n}")));
    }
    let cols: [Vec<f64>; 3] = [x.iter().map(|&x| x * x.ln()).collect(), x.to_vec(), vec![1.0; n]];
    let scale: Vec<f64> = cols.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    if scale.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
        return Err(Error::FitDegenerate("zero or non-finite column".into()));
    }
    let mut m: Vec<[f64; 3]> = (0..n).map(|i| [cols[0][i] / scale[0], cols[1][i] / scale[1], cols[2][i] / scale[2]]).collect();
    let mut b = y.to_vec();
    let mut diag = [0.0; 3];
    for k in 0..3 {
        let norm = (k..n).map(|i| m[i][k] * m[i][k]).sum::<f64>().sqrt();
        let alpha = if m[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..n).map(|i| m[i][k]).collect();
        v[0] -= alpha;
        let vn: f64 = v.iter().map(|t| t * t).sum();
        if vn > 0.0 {
            for j in k..3 {
                let dot: f64 = (k..n).map(|i| v[i - k] * m[i][j]).sum();
                for i in k..n {
                    m[i][j] -= 2.0 * v[i - k] * dot / vn;
                }
            }
            let dot: f64 = (k..n).map(|i| v[i - k] * b[i]).sum();
            for i in k..n {
                b[i] -= 2.0 * v[i - k] * dot / vn;
            }
        }
        diag[k] = m[k][k];
    }
    let dmax = diag.iter().fold(0.0f64, |a, d| a.max(d.abs()));
    let dmin = diag.iter().fold(f64::INFINITY, |a, d| a.min(d.abs()));
    if !(dmin > 1e-12 * dmax) {
        return Err(Error::FitDegenerate(format!("condition estimate {:e}", dmax / dmin)));
    }
    let mut c = [0.0; 3];
    for k in (0..3).rev() {
        let s: f64 = (k + 1..3).map(|j| m[k][j] * c[j]).sum();
        c[k] = (b[k] - s) / m[k][k];
    }
    let coef = [c[0] / scale[0], c[1] / scale[1], c[2] / scale[2]];
    let residual = x
        .iter()
        .zip(y)
        .map(|(&x, &y)| (coef[0] * x * x.ln() + coef[1] * x + coef[2] - y).abs())
        .fold(0.0, f64::max);
    let ymax = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ymin = y.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(TypeLFit {
        phi1: coef[0],
        c2: coef[1],
        psi0: coef[2],
        residual,
        range: ymax - ymin,
        x: x.to_vec(),
        y: y.to_vec(),
    })
}

/// Geometric offsets in `[1e-9, 1e-4]` (in units of `sigma = p1`).
pub fn typel_offsets(n: usize) -> Vec<f64> {
    let (lo, hi) = (1e-9f64.ln(), 1e-4f64.ln());
    (0..n).map(|i| (lo + (hi - lo) * i as f64 / (n - 1).max(1) as f64).exp()).collect()
}

/// Sample `p2` at `n_points` offsets `x = |sigma - sigma_sep|` from the
/// chart's hyperbolic end and fit the type-(L) shape.
pub fn typel_fit(actions: &Actions, chart: &LeafChart, n_points: usize) -> Result<TypeLFit> {
    let from_lo = match (&chart.lo, &chart.hi) {
        (Boundary::Hyperbolic { .. }, _) => true,
        (_, Boundary::Hyperbolic { .. }) => false,
        _ => {
            return Err(Error::WrongBoundaryType(format!(
                "chart {} has no hyperbolic end (ends {:?} / {:?})",
                chart.id, chart.lo, chart.hi
            )))
        }
    };
    let p = actions.theta_period();
    let x = typel_offsets(n_points);
    let y = x
        .iter()
        .map(|&x| {
            let pt = if from_lo { ChartPoint::FromLo(x / p) } else { ChartPoint::FromHi(x / p) };
            actions.p2_at(chart, pt)
        })
        .collect::<Result<Vec<_>>>()?;
    typel_fit_data(&x, &y)
}
