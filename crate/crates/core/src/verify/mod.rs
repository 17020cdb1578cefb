//! End-to-end checks: front slope against `lambda(A)`, pole periodicity,
//! masked additivity, plus the oscillatory-integral and equidistribution
//! engines.

pub mod ergodic;
pub mod smooth;
pub mod statphase;

use serde::Serialize;

use crate::actions::{check_a2, check_a3_a4, A2Report, A3A4Report, ActionTol, Actions, LambdaReport};
use crate::error::{Error, Result};
use crate::flow::IntegratorConfig;
use crate::front::{length_series, log_times, slope_estimate, FrontConfig, LengthSeries, SlopeEstimate};
use crate::geometry::{HamiltonianModel, Rect, SurfaceModel, SurfacePoint};

pub use ergodic::{ergodic_convergence, ergodic_lhs, ergodic_rhs, ergodic_table, ErgodicProblem, ErgodicReport, Mode};
pub use smooth::Smooth;
pub use statphase::{
    critical_points, statphase_decay_rate, statphase_direct, statphase_leading, Amplitude, DecayMode, DecayReport,
    OscillatoryProblem,
};

/// Everything a front-versus-actions comparison needs.
#[derive(Clone, Debug)]
pub struct Setup {
    pub surface: SurfaceModel,
    pub ham: HamiltonianModel,
    pub a: SurfacePoint,
    pub integ: IntegratorConfig,
    pub front: FrontConfig,
    pub tol: ActionTol,
    pub horizon: f64,
    /// Number of log-spaced record times.
    pub n_times: usize,
    /// Fraction of the record times used by the slope fit.
    pub tail_fraction: f64,
    pub gap_tol: f64,
}

impl Setup {
    pub fn new(surface: SurfaceModel, ham: HamiltonianModel, a: SurfacePoint) -> Self {
        Self {
            surface,
            ham,
            a,
            integ: IntegratorConfig::default(),
            front: FrontConfig::default(),
            tol: ActionTol::default(),
            horizon: 500.0,
            n_times: 32,
            tail_fraction: 0.25,
            gap_tol: 0.03,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidInput(format!("horizon {} must be positive", self.horizon)));
        }
        if self.n_times < 8 {
            return Err(Error::InvalidInput("need at least 8 record times".into()));
        }
        if !(self.tail_fraction > 0.0 && self.tail_fraction <= 1.0) {
            return Err(Error::InvalidInput("tail_fraction must lie in (0, 1]".into()));
        }
        Ok(())
    }

    /// Record times ending at `horizon`, starting at `horizon / 500`.
    pub fn times(&self, horizon: f64) -> Vec<f64> {
        log_times(horizon, self.n_times, Some(self.horizon / 500.0))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AssumptionReport {
    /// Morse classification of the singular set succeeded.
    pub a1: bool,
    pub a2: Vec<A2Report>,
    pub a3_a4: A3A4Report,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlopeReport {
    pub measured_slope: f64,
    pub uncertainty: f64,
    pub predicted_lambda: f64,
    pub relative_gap: f64,
    pub gap_tol: f64,
    pub pass: bool,
    pub horizon: f64,
    /// The same comparison with the record times ending at `horizon / 2`.
    pub half_horizon_gap: f64,
    /// `relative_gap < half_horizon_gap`.
    pub gap_shrinks: bool,
    pub assumptions: AssumptionReport,
    pub lambda: LambdaReport,
    pub series: LengthSeries,
}

fn relative_gap(measured: f64, predicted: f64) -> f64 {
    (measured - predicted).abs() / predicted.abs()
}

/// Check A1 to A4; any failure is an error naming the assumption.
pub fn check_assumptions(actions: &Actions, a: SurfacePoint) -> Result<AssumptionReport> {
    let a3_a4 = check_a3_a4(actions, a)?;
    if let Some(f) = &a3_a4.failure {
        return Err(Error::AssumptionFailure { assumption: "A3/A4".into(), detail: f.clone() });
    }
    let mut a2 = Vec::new();
    for c in actions.charts() {
        let r = check_a2(actions, c, 8)?;
        if !r.pass {
            let bad = r.samples.iter().find(|s| s.orders.is_none()).map_or(0.0, |s| s.u);
            return Err(Error::AssumptionFailure {
                assumption: "A2".into(),
                detail: format!("frequency derivatives are dependent on chart {} at u = {bad}", c.id),
            });
        }
        a2.push(r);
    }
    Ok(AssumptionReport { a1: true, a2, a3_a4 })
}

fn build_actions(setup: &Setup) -> Result<Actions> {
    Actions::new(&setup.surface, &setup.ham, setup.tol).map_err(|e| match e {
        Error::MorseViolation { s, second } => Error::AssumptionFailure {
            assumption: "A1".into(),
            detail: format!("degenerate critical point at s = {s} (q'' = {second:e})"),
        },
        e => e,
    })
}

/// Run the front to the horizon, fit the slope and compare with `lambda(A)`.
/// The record times for `horizon / 2` are folded into the same run.
pub fn verify_theorem(setup: &Setup) -> Result<SlopeReport> {
    setup.validate()?;
    let actions = build_actions(setup)?;
    let assumptions = check_assumptions(&actions, setup.a)?;
    let lambda = actions.lambda(setup.a)?;
    let full = setup.times(setup.horizon);
    let half = setup.times(0.5 * setup.horizon);
    let mut all: Vec<f64> = full.iter().chain(&half).copied().collect();
    all.sort_by(f64::total_cmp);
    all.dedup();
    let series = length_series(&setup.ham, &setup.surface, setup.a, &all, setup.front, setup.integ, &[])?;
    let pick = |ts: &[f64]| -> Result<SlopeEstimate> {
        let l: Vec<f64> = ts
            .iter()
            .map(|t| series.lengths[series.times.iter().position(|u| u == t).expect("recorded time")])
            .collect();
        slope_estimate(ts, &l, setup.tail_fraction)
    };
    let s_full = pick(&full)?;
    let s_half = pick(&half)?;
    let relative_gap = relative_gap(s_full.slope, lambda.lambda);
    let half_horizon_gap = self::relative_gap(s_half.slope, lambda.lambda);
    Ok(SlopeReport {
        measured_slope: s_full.slope,
        uncertainty: s_full.uncertainty,
        predicted_lambda: lambda.lambda,
        relative_gap,
        gap_tol: setup.gap_tol,
        pass: relative_gap <= setup.gap_tol,
        horizon: setup.horizon,
        half_horizon_gap,
        gap_shrinks: relative_gap < half_horizon_gap,
        assumptions,
        lambda,
        series,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PeriodicReport {
    pub period: f64,
    pub window: Vec<f64>,
    pub lengths: Vec<f64>,
    pub shifted: Vec<f64>,
    /// `max | |S_t| - |S_{t + 2L}| |`.
    pub max_gap: f64,
    pub mean: f64,
    pub relative: f64,
    pub pass: bool,
}

/// Compare `|S_t|` with `|S_{t + 2L}|` over `n` times in `(0, 2L]` for a
/// front from a sphere pole.
pub fn verify_periodic_pole(setup: &Setup, n: usize) -> Result<PeriodicReport> {
    let s = &setup.surface;
    if !s.is_sphere() || !s.near_pole(setup.a.s) {
        return Err(Error::InvalidInput("periodicity check needs a sphere of revolution and A at a pole".into()));
    }
    if n < 2 {
        return Err(Error::InvalidInput("need at least two window times".into()));
    }
    let period = 2.0 * s.length();
    let window: Vec<f64> = (1..=n).map(|i| period * i as f64 / n as f64).collect();
    let times: Vec<f64> = window.iter().copied().chain(window.iter().map(|t| t + period)).collect();
    let series = length_series(&setup.ham, s, setup.a, &times, setup.front, setup.integ, &[])?;
    let (lengths, shifted) = series.lengths.split_at(n);
    let max_gap = lengths.iter().zip(shifted).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let mean = lengths.iter().sum::<f64>() / n as f64;
    let relative = max_gap / mean;
    Ok(PeriodicReport {
        period,
        window,
        lengths: lengths.to_vec(),
        shifted: shifted.to_vec(),
        max_gap,
        mean,
        relative,
        pass: relative <= 0.01,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MaskReport {
    pub rect: Rect,
    pub complement: Vec<Rect>,
    pub slope_full: f64,
    pub slope_rect: f64,
    pub slope_complement: f64,
    /// `|slope_rect + slope_complement - slope_full| / slope_full`.
    pub additivity_gap: f64,
    pub lambda_full: f64,
    pub lambda_rect: f64,
    pub lambda_complement: f64,
    pub pass: bool,
}

/// Slopes of the front length inside `rect` and inside its complement,
/// against the full slope (and the masked `lambda` predictions).
pub fn verify_masked(setup: &Setup, rect: Rect) -> Result<MaskReport> {
    setup.validate()?;
    rect.validate(&setup.surface)?;
    let complement = rect.complement(&setup.surface);
    let mut masks = vec![rect];
    masks.extend(complement.iter().copied());
    let times = setup.times(setup.horizon);
    let series = length_series(&setup.ham, &setup.surface, setup.a, &times, setup.front, setup.integ, &masks)?;
    let col = |j: usize| -> Vec<f64> { series.masked.iter().map(|m| m[j]).collect() };
    let slope = |l: &[f64]| slope_estimate(&series.times, l, setup.tail_fraction).map(|s| s.slope);
    let slope_full = slope(&series.lengths)?;
    let slope_rect = slope(&col(0))?;
    let mut slope_complement = 0.0;
    for j in 1..masks.len() {
        slope_complement += slope(&col(j))?;
    }
    let actions = build_actions(setup)?;
    let lambda_full = actions.lambda(setup.a)?.lambda;
    let lambda_rect = actions.lambda_masked(setup.a, Some(&rect))?.lambda;
    let mut lambda_complement = 0.0;
    for c in &complement {
        lambda_complement += actions.lambda_masked(setup.a, Some(c))?.lambda;
    }
    let additivity_gap = relative_gap(slope_rect + slope_complement, slope_full);
    Ok(MaskReport {
        rect,
        complement,
        slope_full,
        slope_rect,
        slope_complement,
        additivity_gap,
        lambda_full,
        lambda_rect,
        lambda_complement,
        pass: additivity_gap <= 0.05,
    })
}
