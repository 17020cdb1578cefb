//! Oscillatory integrals `I(t) = int exp(i t S(x)) a(x) dx`: a reference
//! quadrature and the leading stationary-phase term.

use std::f64::consts::{FRAC_PI_4, TAU};

use serde::{Deserialize, Serialize};

use super::smooth::Smooth;
use crate::error::{Error, Result};
use crate::quad::{brent, gk21_complex, CompensatedSum};

/// Amplitude `p(x) * beta((x - center) / radius)` with the bump
/// `beta(u) = exp(1 - 1 / (1 - u^2))` on `|u| < 1` (so `beta(0) = 1`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Amplitude {
    pub poly: Vec<f64>,
    pub center: f64,
    pub radius: f64,
}

impl Amplitude {
    pub fn bump(center: f64, radius: f64) -> Self {
        Self { poly: vec![1.0], center, radius }
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - self.radius, self.center + self.radius)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let u = (x - self.center) / self.radius;
        if u.abs() >= 1.0 {
            return 0.0;
        }
        let b = (1.0 - 1.0 / (1.0 - u * u)).exp();
        let p = self.poly.iter().rev().fold(0.0, |acc, &c| acc * x + c);
        p * b
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OscillatoryProblem {
    pub phase: Smooth,
    pub amplitude: Amplitude,
}

impl OscillatoryProblem {
    pub fn validate(&self) -> Result<()> {
        self.phase.validate()?;
        if !(self.amplitude.radius > 0.0 && self.amplitude.radius.is_finite() && self.amplitude.center.is_finite()) {
            return Err(Error::InvalidInput("amplitude radius must be positive".into()));
        }
        Ok(())
    }
}

/// Complex numbers as `[re, im]`.
pub type C64 = [f64; 2];

/// A critical point of the phase inside the support.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CriticalPoint {
    pub x: f64,
    pub s2: f64,
}

const SCAN: usize = 4096;

fn scale(p: &OscillatoryProblem) -> f64 {
    let (lo, hi) = p.amplitude.support();
    let n = 256;
    (0..=n)
        .map(|i| p.phase.deriv(lo + (hi - lo) * i as f64 / n as f64, 1).abs())
        .fold(0.0, f64::max)
        .max(1e-300)
}

/// Zeros of `S'` in the open support. Tangential zeros (no sign change) are
/// reported too and are degenerate by construction.
pub fn critical_points(p: &OscillatoryProblem) -> Result<Vec<CriticalPoint>> {
    p.validate()?;
    let (lo, hi) = p.amplitude.support();
    let ds = |x: f64| p.phase.deriv(x, 1);
    let sc = scale(p);
    let xs: Vec<f64> = (0..=SCAN).map(|i| lo + (hi - lo) * i as f64 / SCAN as f64).collect();
    let vs: Vec<f64> = xs.iter().map(|&x| ds(x)).collect();
    let mut out: Vec<f64> = Vec::new();
    for i in 0..SCAN {
        let (a, b) = (vs[i], vs[i + 1]);
        if a == 0.0 && i > 0 {
            out.push(xs[i]);
        } else if a * b < 0.0 {
            if let Some(r) = brent(ds, xs[i], xs[i + 1], 1e-15 * (hi - lo)) {
                out.push(r);
            }
        }
    }
    // Tangential zeros: interior minima of |S'| that vanish to tolerance.
    for i in 1..SCAN {
        let (a, b, c) = (vs[i - 1].abs(), vs[i].abs(), vs[i + 1].abs());
        if b <= a && b <= c && vs[i - 1] * vs[i + 1] > 0.0 {
            let d2 = |x: f64| p.phase.deriv(x, 2);
            let x = brent(d2, xs[i - 1], xs[i + 1], 1e-15 * (hi - lo)).unwrap_or(xs[i]);
            if ds(x).abs() <= 1e-12 * sc {
                out.push(x);
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * (hi - lo));
    Ok(out
        .into_iter()
        .filter(|&x| x > lo && x < hi)
        .map(|x| CriticalPoint { x, s2: p.phase.deriv(x, 2) })
        .collect())
}

fn degenerate(p: &OscillatoryProblem, c: &CriticalPoint) -> bool {
    let (lo, hi) = p.amplitude.support();
    c.s2.abs() <= 1e-8 * scale(p) / (hi - lo)
}

/// Leading stationary-phase term
/// `sum_j sqrt(2 pi) e^{i eps_j pi/4} |t S''(x_j)|^{-1/2} e^{i t S(x_j)} a(x_j)`.
pub fn statphase_leading(p: &OscillatoryProblem, t: f64) -> Result<C64> {
    if !(t > 0.0) {
        return Err(Error::InvalidInput(format!("t = {t} must be positive")));
    }
    let mut out = [0.0; 2];
    for c in critical_points(p)? {
        if degenerate(p, &c) {
            return Err(Error::DegenerateCritical { x: c.x });
        }
        let amp = p.amplitude.eval(c.x);
        if amp == 0.0 {
            continue;
        }
        let mag = TAU.sqrt() * (t * c.s2.abs()).powf(-0.5) * amp;
        let arg = t * p.phase.eval(c.x) + c.s2.signum() * FRAC_PI_4;
        out[0] += mag * arg.cos();
        out[1] += mag * arg.sin();
    }
    Ok(out)
}

/// Panels no wider than `frac` of the local oscillation scale of
/// `exp(i t S)`, plus a cap tied to the bump radius.
fn panels(p: &OscillatoryProblem, t: f64, frac: f64, budget: usize) -> Result<Vec<f64>> {
    let (lo, hi) = p.amplitude.support();
    let cap = p.amplitude.radius / 16.0;
    let mut xs = vec![lo];
    let mut x = lo;
    while x < hi {
        let d1 = p.phase.deriv(x, 1).abs();
        let d2 = p.phase.deriv(x, 2).abs();
        let d3 = p.phase.deriv(x, 3).abs();
        let mut h = cap;
        if d1 > 0.0 {
            h = h.min(TAU / (t * d1));
        }
        if d2 > 0.0 {
            h = h.min((TAU / (t * d2)).sqrt());
        }
        if d3 > 0.0 {
            h = h.min((6.0 * TAU / (t * d3)).cbrt());
        }
        x = (x + frac * h).min(hi);
        xs.push(x);
        if xs.len() > budget {
            return Err(Error::BudgetExceeded(format!("oscillatory quadrature at t = {t} needs more than {budget} panels")));
        }
    }
    Ok(xs)
}

/// Largest panel count before [`statphase_direct`] gives up.
pub const PANEL_BUDGET: usize = 20_000_000;

/// Reference value of `I(t)` by Gauss-Kronrod panels scaled to the local
/// period; the panel width is halved until two passes agree to `1e-8`.
pub fn statphase_direct(p: &OscillatoryProblem, t: f64) -> Result<C64> {
    p.validate()?;
    if !(t > 0.0) {
        return Err(Error::InvalidInput(format!("t = {t} must be positive")));
    }
    let eval = |frac: f64| -> Result<C64> {
        let xs = panels(p, t, frac, PANEL_BUDGET)?;
        let mut re = CompensatedSum::new();
        let mut im = CompensatedSum::new();
        let mut f = |x: f64| {
            let a = p.amplitude.eval(x);
            let (s, c) = (t * p.phase.eval(x)).sin_cos();
            (a * c, a * s)
        };
        for w in xs.windows(2) {
            let ((r, i), _) = gk21_complex(&mut f, w[0], w[1]);
            re.add(r);
            im.add(i);
        }
        Ok([re.value(), im.value()])
    };
    let mut frac = 0.5;
    let mut prev = eval(frac)?;
    for _ in 0..6 {
        frac *= 0.5;
        let next = eval(frac)?;
        let d = (next[0] - prev[0]).hypot(next[1] - prev[1]);
        if d < 1e-8 {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::BudgetExceeded(format!("oscillatory quadrature at t = {t} did not settle")))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayMode {
    /// Fit of `|direct - leading|` (nondegenerate phase).
    Remainder,
    /// Fit of `|direct|` (degenerate critical point or none at all).
    Magnitude,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayReport {
    pub mode: DecayMode,
    pub t: Vec<f64>,
    pub direct: Vec<C64>,
    pub leading: Vec<Option<C64>>,
    /// The fitted quantity per `t`.
    pub gap: Vec<f64>,
    pub slope: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Threshold on the remainder slope (the expected value is `-3/2`).
pub const REMAINDER_SLOPE: f64 = -1.3;

/// Log-log slope of the stationary-phase remainder over `t_grid`. With a
/// degenerate critical point the magnitude `|I(t)|` is fitted instead and
/// must decay.
pub fn statphase_decay_rate(p: &OscillatoryProblem, t_grid: &[f64]) -> Result<DecayReport> {
    if t_grid.len() < 2 {
        return Err(Error::InvalidInput("need at least two times".into()));
    }
    let crit = critical_points(p)?;
    let degenerate = crit.iter().any(|c| degenerate(p, c));
    let mode = if degenerate { DecayMode::Magnitude } else { DecayMode::Remainder };
    let mut direct = Vec::new();
    let mut leading = Vec::new();
    let mut gap = Vec::new();
    for &t in t_grid {
        let d = statphase_direct(p, t)?;
        direct.push(d);
        match mode {
            DecayMode::Remainder => {
                let l = statphase_leading(p, t)?;
                gap.push((d[0] - l[0]).hypot(d[1] - l[1]));
                leading.push(Some(l));
            }
            DecayMode::Magnitude => {
                gap.push(d[0].hypot(d[1]));
                leading.push(None);
            }
        }
    }
    let slope = loglog_slope(t_grid, &gap);
    let threshold = match mode {
        DecayMode::Remainder => REMAINDER_SLOPE,
        DecayMode::Magnitude => 0.0,
    };
    let pass = match mode {
        DecayMode::Remainder => slope <= threshold,
        DecayMode::Magnitude => slope < threshold,
    };
    Ok(DecayReport { mode, t: t_grid.to_vec(), direct, leading, gap, slope, threshold, pass })
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> =
        x.iter().zip(y).filter(|(a, b)| **a > 0.0 && **b > 0.0).map(|(a, b)| (a.ln(), b.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// `n` log-spaced times in `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1).max(1) as f64).exp()).collect()
}
