//! Equidistribution of `s -> t V(s)` on the 2-torus:
//! `int_J F(s, [t V(s)]) ds -> int_{J x T^2} F ds dtheta`.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::smooth::Smooth;
use super::statphase::loglog_slope;
use crate::error::{Error, Result};
use crate::quad::{gk21, CompensatedSum};

/// One Fourier mode `a(s) cos(2 pi k.theta) + b(s) sin(2 pi k.theta)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mode {
    pub k: [i64; 2],
    #[serde(default)]
    pub a: Smooth,
    #[serde(default)]
    pub b: Smooth,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErgodicProblem {
    /// The interval `J`.
    pub interval: [f64; 2],
    /// Components of `V(s)`.
    pub v: [Smooth; 2],
    pub modes: Vec<Mode>,
}

impl ErgodicProblem {
    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.interval;
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(Error::InvalidInput(format!("interval [{lo}, {hi}] must be bounded and nonempty")));
        }
        self.v[0].validate()?;
        self.v[1].validate()?;
        for m in &self.modes {
            m.a.validate()?;
            m.b.validate()?;
        }
        Ok(())
    }

    /// `F(s, theta)`.
    pub fn f(&self, s: f64, theta: [f64; 2]) -> f64 {
        self.modes
            .iter()
            .map(|m| {
                let ph = TAU * (m.k[0] as f64 * theta[0] + m.k[1] as f64 * theta[1]);
                m.a.eval(s) * ph.cos() + m.b.eval(s) * ph.sin()
            })
            .sum()
    }

    /// Dominating bound `psi(s) = sum |a_k(s)| + |b_k(s)|`.
    pub fn psi(&self, s: f64) -> f64 {
        self.modes.iter().map(|m| m.a.eval(s).abs() + m.b.eval(s).abs()).sum()
    }

    /// `max |F|` over `J x T^2`, bounded by `max psi`.
    pub fn max_f(&self) -> f64 {
        let [lo, hi] = self.interval;
        let n = 2048;
        (0..=n).map(|i| self.psi(lo + (hi - lo) * i as f64 / n as f64)).fold(0.0, f64::max)
    }
}

fn integrate_panels<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, n: usize) -> f64 {
    let h = (hi - lo) / n as f64;
    let mut acc = CompensatedSum::new();
    for i in 0..n {
        acc.add(gk21(&mut f, lo + i as f64 * h, lo + (i + 1) as f64 * h).0);
    }
    acc.value()
}

/// Panels needed to resolve `cos(2 pi t k.V(s))` across `J`.
fn panel_count(p: &ErgodicProblem, t: f64) -> usize {
    let [lo, hi] = p.interval;
    let n = 512;
    let mut max_rate = 0.0f64;
    for m in &p.modes {
        let rate = (0..=n)
            .map(|i| {
                let s = lo + (hi - lo) * i as f64 / n as f64;
                (m.k[0] as f64 * p.v[0].deriv(s, 1) + m.k[1] as f64 * p.v[1].deriv(s, 1)).abs()
            })
            .fold(0.0, f64::max);
        max_rate = max_rate.max(rate);
    }
    // About two panels per oscillation, at least 16.
    let osc = t * max_rate * (hi - lo);
    (2.0 * osc).ceil().max(16.0) as usize
}

/// Largest panel count before [`ergodic_lhs`] gives up.
pub const PANEL_BUDGET: usize = 50_000_000;

/// `int_J F(s, [t V(s)]) ds`, to about `1e-6` (panel doubling check).
pub fn ergodic_lhs(p: &ErgodicProblem, t: f64) -> Result<f64> {
    p.validate()?;
    let [lo, hi] = p.interval;
    let f = |s: f64| {
        let th = [t * p.v[0].eval(s), t * p.v[1].eval(s)];
        p.f(s, [th[0] - th[0].floor(), th[1] - th[1].floor()])
    };
    let mut n = panel_count(p, t);
    let mut prev = integrate_panels(f, lo, hi, n);
    let target = 1e-6 * p.max_f().max(f64::MIN_POSITIVE);
    for _ in 0..8 {
        n *= 2;
        if n > PANEL_BUDGET {
            break;
        }
        let next = integrate_panels(f, lo, hi, n);
        if (next - prev).abs() <= target {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::BudgetExceeded(format!("ergodic quadrature at t = {t} did not settle")))
}

/// `int_{J x T^2} F = int_J a_0(s) ds`: only the zero mode survives.
pub fn ergodic_rhs(p: &ErgodicProblem) -> Result<f64> {
    p.validate()?;
    let [lo, hi] = p.interval;
    Ok(p.modes.iter().filter(|m| m.k == [0, 0]).map(|m| m.a.integral(lo, hi)).sum())
}

/// `int_J psi(s) ds`, which bounds `|lhs(t)|` for every `t`.
pub fn psi_integral(p: &ErgodicProblem) -> Result<f64> {
    p.validate()?;
    let [lo, hi] = p.interval;
    Ok(integrate_panels(|s| p.psi(s), lo, hi, 256))
}

/// Smallest `(k, l)` with `V^(k)`, `V^(l)` independent at `s`, if any.
fn derivative_pair(p: &ErgodicProblem, s: f64) -> Option<(u8, u8)> {
    let d: Vec<[f64; 2]> = (1..=4).map(|k| [p.v[0].deriv(s, k), p.v[1].deriv(s, k)]).collect();
    let scale = d.iter().map(|v| v[0].hypot(v[1])).fold(0.0, f64::max);
    if scale == 0.0 {
        return None;
    }
    for k in 0..4 {
        for l in k + 1..4 {
            let det = d[k][0] * d[l][1] - d[k][1] * d[l][0];
            if det.abs() > 1e-6 * scale * scale {
                return Some((k as u8 + 1, l as u8 + 1));
            }
        }
    }
    None
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErgodicReport {
    pub t: Vec<f64>,
    pub lhs: Vec<f64>,
    pub rhs: f64,
    pub error: Vec<f64>,
    /// `5%` of `max |F| * |J|`.
    pub threshold: f64,
    /// Log-log slope of the error over the grid.
    pub trend: f64,
    pub pass: bool,
}

/// Check the derivative condition on `V` over `J`, then tabulate
/// `|lhs(t) - rhs|`. Passes when the three largest times are below `5%` of
/// `max |F| |J|` and the error trends down.
pub fn ergodic_convergence(p: &ErgodicProblem, t_grid: &[f64]) -> Result<ErgodicReport> {
    p.validate()?;
    let [lo, hi] = p.interval;
    for i in 0..=64 {
        let s = lo + (hi - lo) * i as f64 / 64.0;
        if derivative_pair(p, s).is_none() {
            return Err(Error::HypothesisFailure(format!(
                "no two of V', V'', V''', V'''' are independent at s = {s}"
            )));
        }
    }
    ergodic_table(p, t_grid)
}

/// The convergence table without the hypothesis check.
pub fn ergodic_table(p: &ErgodicProblem, t_grid: &[f64]) -> Result<ErgodicReport> {
    if t_grid.len() < 3 || t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("need at least three increasing times".into()));
    }
    let rhs = ergodic_rhs(p)?;
    let lhs: Vec<f64> = t_grid.iter().map(|&t| ergodic_lhs(p, t)).collect::<Result<_>>()?;
    let error: Vec<f64> = lhs.iter().map(|l| (l - rhs).abs()).collect();
    let [lo, hi] = p.interval;
    let threshold = 0.05 * p.max_f() * (hi - lo);
    let n = error.len();
    let positive = error.iter().filter(|&&e| e > 0.0).count();
    let trend = if positive >= 2 { loglog_slope(t_grid, &error) } else { f64::NEG_INFINITY };
    let small = error[n - 3..].iter().all(|&e| e <= threshold);
    let pass = small && (trend < 0.0 || error.iter().all(|&e| e <= 1e-9 * threshold.max(1.0)));
    Ok(ErgodicReport { t: t_grid.to_vec(), lhs, rhs, error, threshold, trend, pass })
}
