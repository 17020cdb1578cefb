//! `N_A(sigma)` and the asymptotic slope `lambda(A) = int N_A |d sigma|`.

use rayon::prelude::*;
use serde::Serialize;

use super::charts::{turning_points, Boundary, ChartPoint, LeafChart, Regime};
use super::{Actions, HAAR_MASS};
use crate::error::{Error, Result};
use crate::geometry::{rem, Rect, SurfacePoint};
use crate::quad::{compensated_sum, integrate, QuadTol};

/// One subdivision step toward a hyperbolic end.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TailStep {
    /// Offset of the subdivision point from the end (in `kappa`).
    pub offset: f64,
    /// Estimated error of closing the integral at this offset.
    pub estimate: f64,
    /// Closure value `int_0^offset` at this step.
    pub closure: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChartContribution {
    pub chart_id: usize,
    pub regime: Regime,
    /// `(kappa_a, kappa_b, N_A)` pieces.
    pub pieces: Vec<(f64, f64, u8)>,
    pub value: f64,
    /// Final closure-error estimate at hyperbolic ends.
    pub tail: f64,
    pub tail_steps: Vec<TailStep>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LambdaReport {
    pub lambda: f64,
    pub charts: Vec<ChartContribution>,
    /// Sum of the final tail estimates.
    pub tail: f64,
}

/// Smallest offset used when approaching a hyperbolic end.
const MIN_OFFSET: f64 = 1e-13;

impl Actions {
    /// Absolute density level treated as zero by the quadratures.
    fn density_floor(&self) -> f64 {
        1e-5 * self.tol.lambda_rel * self.surface.length() * self.theta_period()
    }

    fn fiber_clairaut(&self, a: SurfacePoint) -> Result<f64> {
        if self.surface.near_pole(a.s) {
            return Err(Error::AssumptionFailure {
                assumption: "A3/A4".into(),
                detail: "A is a pole: every initial direction has p_theta = 0 and |S_t| is periodic".into(),
            });
        }
        Ok(self.ham.fiber(&self.surface, a)?.clairaut_max())
    }

    fn contains_s(&self, chart: &LeafChart, kappa: f64, s_a: f64) -> Result<bool> {
        let level = super::charts::Level::plain(self.radial(), kappa);
        let (sm, sp) = turning_points(&level, chart, &self.nodes)?;
        if self.surface.is_sphere() {
            return Ok(s_a > sm && s_a < sp);
        }
        let l = self.surface.length();
        Ok(sm + rem(s_a - sm, l) < sp)
    }

    /// Number of covectors of `Sigma^A` on the torus `sigma`.
    pub fn count_na(&self, chart: &LeafChart, sigma: f64, a: SurfacePoint) -> Result<u8> {
        if chart.regime == Regime::Flat {
            return Ok(1);
        }
        let h = self.fiber_clairaut(a)?;
        let kappa = (sigma / self.theta_period()).abs();
        if !chart.contains(sigma / self.theta_period()) {
            return Err(Error::InvalidInput(format!("sigma = {sigma} is not interior to chart {}", chart.id)));
        }
        if (kappa - h).abs() <= 1e-12 * h {
            return Err(Error::BoundaryAmbiguity { clairaut: sigma / self.theta_period() });
        }
        self.count_na_kappa(chart, kappa, h, a.s)
    }

    fn count_na_kappa(&self, chart: &LeafChart, kappa: f64, h: f64, s_a: f64) -> Result<u8> {
        if kappa >= h {
            return Ok(0);
        }
        match chart.regime {
            Regime::Flat => Ok(1),
            Regime::Circulating => Ok(1),
            Regime::Oscillating => Ok(if self.contains_s(chart, kappa, s_a)? { 2 } else { 0 }),
        }
    }

    /// Pieces of the chart on which `N_A` is constant.
    fn na_pieces(&self, chart: &LeafChart, h: f64, s_a: f64) -> Result<Vec<(f64, f64, u8)>> {
        let (lo, hi) = (chart.kappa_lo, chart.kappa_hi);
        let mut cuts = vec![lo];
        if h > lo && h < hi {
            cuts.push(h);
        }
        cuts.push(hi);
        let mut out = Vec::new();
        for w in cuts.windows(2) {
            let n = self.count_na_kappa(chart, 0.5 * (w[0] + w[1]), h, s_a)?;
            out.push((w[0], w[1], n));
        }
        Ok(out)
    }

    /// `int N_A |d sigma|` over one chart, optionally restricted to `mask`.
    pub fn chart_lambda(&self, chart: &LeafChart, a: SurfacePoint, mask: Option<&Rect>) -> Result<ChartContribution> {
        if chart.regime == Regime::Flat {
            let r = self.flat_radius();
            let frac = mask.map_or(1.0, |m| m.theta_fraction(&self.surface) * (m.s[1] - m.s[0]) / self.surface.length());
            return Ok(ChartContribution {
                chart_id: chart.id,
                regime: chart.regime,
                pieces: vec![(0.0, std::f64::consts::TAU, 1)],
                value: HAAR_MASS * std::f64::consts::TAU * r * frac,
                tail: 0.0,
                tail_steps: Vec::new(),
            });
        }
        let h = self.fiber_clairaut(a)?;
        let pieces = self.na_pieces(chart, h, a.s)?;
        let mut parts = Vec::new();
        let mut tail = 0.0;
        let mut steps = Vec::new();
        for &(ka, kb, n) in &pieces {
            if n == 0 {
                continue;
            }
            let mid = 0.5 * (ka + kb);
            // Lower half measured from kappa_lo where possible, upper half
            // from kappa_hi.
            for (end_is_lo, x0, x1) in [(true, ka - chart.kappa_lo, mid - chart.kappa_lo), (false, chart.kappa_hi - kb, chart.kappa_hi - mid)] {
                let at_end = x0 == 0.0;
                let boundary = if end_is_lo { &chart.lo } else { &chart.hi };
                let mk = |x: f64| if end_is_lo { ChartPoint::FromLo(x) } else { ChartPoint::FromHi(x) };
                if at_end && matches!(boundary, Boundary::Hyperbolic { .. }) {
                    let (v, t, s) = self.hyperbolic_half(chart, x1, &mk, mask)?;
                    parts.push(n as f64 * v);
                    tail += n as f64 * t;
                    steps.extend(s);
                } else {
                    let tol = QuadTol { abs: self.density_floor() * (x1 - x0), rel: 1e-2 * self.tol.lambda_rel, max_intervals: 400 };
                    let mut err = None;
                    let r = integrate(
                        |x| match self.density_kappa(chart, mk(x), mask) {
                            Ok(d) => d,
                            Err(e) => {
                                err.get_or_insert(e);
                                f64::NAN
                            }
                        },
                        x0,
                        x1,
                        tol,
                    );
                    if let Some(e) = err {
                        return Err(e);
                    }
                    parts.push(n as f64 * r?.value);
                }
            }
        }
        Ok(ChartContribution {
            chart_id: chart.id,
            regime: chart.regime,
            pieces,
            value: compensated_sum(parts),
            tail,
            tail_steps: steps,
        })
    }

    /// `int_0^x1 D dx` toward a hyperbolic end: decades integrated in
    /// `log x`, closed at the last offset by `D~ * nu2` with `D~` the
    /// density per unit `nu2`, which converges at the end while `nu2 -> 0`.
    fn hyperbolic_half(
        &self,
        chart: &LeafChart,
        x1: f64,
        mk: &dyn Fn(f64) -> ChartPoint,
        mask: Option<&Rect>,
    ) -> Result<(f64, f64, Vec<TailStep>)> {
        let mut parts: Vec<f64> = Vec::new();
        let mut steps: Vec<TailStep> = Vec::new();
        let mut x = x1;
        let (mut dt_prev, _) = self.density_per_nu2(chart, mk(x), mask)?;
        let mut last_estimate = f64::INFINITY;
        let mut rising = 0;
        loop {
            let xn = 0.1 * x;
            let tol = QuadTol { abs: self.density_floor() * 0.9 * x, rel: 1e-2 * self.tol.lambda_rel, max_intervals: 400 };
            let mut err = None;
            let r = integrate(
                |y| {
                    let x = y.exp();
                    match self.density_kappa(chart, mk(x), mask) {
                        Ok(d) => d * x,
                        Err(e) => {
                            err.get_or_insert(e);
                            f64::NAN
                        }
                    }
                },
                xn.ln(),
                x.ln(),
                tol,
            );
            if let Some(e) = err {
                return Err(e);
            }
            parts.push(r?.value);
            x = xn;
            let (dt, nu2) = self.density_per_nu2(chart, mk(x), mask)?;
            let closure = dt * nu2;
            let estimate = (dt - dt_prev).abs() * nu2;
            dt_prev = dt;
            steps.push(TailStep { offset: x, estimate, closure });
            let total = compensated_sum(parts.iter().copied()) + closure;
            if estimate >= last_estimate {
                rising += 1;
            } else {
                rising = 0;
            }
            if rising >= 3 {
                return Err(Error::EndpointDivergence { clairaut: chart.c_sign * mk(x).kappa(chart) });
            }
            last_estimate = estimate;
            let target = self.tol.tail_rel * 1e-2 * total.abs().max(f64::MIN_POSITIVE);
            if (estimate <= target && steps.len() >= 3) || x <= MIN_OFFSET * (1.0 + chart.kappa_hi) {
                return Ok((total, estimate, steps));
            }
        }
    }

    /// `lambda(A)` with the per-chart breakdown.
    pub fn lambda(&self, a: SurfacePoint) -> Result<LambdaReport> {
        self.lambda_masked(a, None)
    }

    /// Slope of the length of `S_t` inside `mask` (whole surface if `None`).
    pub fn lambda_masked(&self, a: SurfacePoint, mask: Option<&Rect>) -> Result<LambdaReport> {
        if let Some(m) = mask {
            m.validate(&self.surface)?;
        }
        if self.charts.iter().all(|c| c.regime != Regime::Flat) {
            self.fiber_clairaut(a)?;
        }
        let charts: Vec<ChartContribution> = self
            .charts
            .par_iter()
            .map(|c| self.chart_lambda(c, a, mask))
            .collect::<Result<_>>()?;
        let lambda = compensated_sum(charts.iter().map(|c| c.value));
        let tail = charts.iter().map(|c| c.tail).sum();
        Ok(LambdaReport { lambda, charts, tail })
    }
}
