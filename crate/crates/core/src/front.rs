//! Wave fronts `S_t`: the fiber circle over `A` pushed by the flow, and its
//! length measured from variational tangents.
//!
//! The circle is sampled at angles `omega` arranged in Simpson panels
//! `(left, mid, right)`. While the trapezoid/Simpson discrepancies add up to
//! more than `tol_front * |S_t|`, the worst panels are split; new samples are
//! integrated from `t = 0`. Panels narrower than `MIN_PANEL` are never split
//! and fall back to chords when their Simpson value is unreliable. Near
//! separatrix directions this leaves a band of directions unresolved, and
//! `|S_t|` misses the length that band accumulates.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::actions::singular::{classify, Radial, Stability};
use crate::error::{Error, Result};
use crate::flow::{advance_from_pole, advance_with_hint, IntegratorConfig, PhaseState};
use crate::geometry::{Fiber, HamiltonianModel, Rect, SurfaceModel, SurfacePoint};
use crate::quad::CompensatedSum;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrontConfig {
    /// Initial number of samples (even, at least 16).
    pub n0: usize,
    /// Relative length tolerance of the refinement.
    pub tol_front: f64,
    /// Refinement is re-checked at least this often in time.
    pub checkpoint_dt: f64,
    /// Hard cap on the number of samples.
    pub max_samples: usize,
}

impl Default for FrontConfig {
    fn default() -> Self {
        Self { n0: 64, tol_front: 1e-3, checkpoint_dt: 10.0, max_samples: 1 << 18 }
    }
}

impl FrontConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n0 < 16 || !self.n0.is_multiple_of(2) {
            return Err(Error::Config(format!("front.n0 = {} must be even and at least 16", self.n0)));
        }
        if !(self.tol_front > 0.0 && self.tol_front < 1.0) {
            return Err(Error::Config(format!("front.tol_front = {} must lie in (0, 1)", self.tol_front)));
        }
        if !(self.checkpoint_dt > 0.0 && self.checkpoint_dt.is_finite()) {
            return Err(Error::Config(format!("front.checkpoint_dt = {} must be positive", self.checkpoint_dt)));
        }
        if self.max_samples < self.n0 {
            return Err(Error::Config("front.max_samples must be at least n0".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Source {
    Fiber(Fiber),
    Pole { north: bool },
}

#[derive(Clone, Copy, Debug)]
struct Sample {
    omega: f64,
    state: PhaseState,
    hint: Option<f64>,
}

/// The sampled front at one time.
#[derive(Clone, Debug)]
pub struct FrontEnsemble {
    surface: SurfaceModel,
    ham: HamiltonianModel,
    integ: IntegratorConfig,
    cfg: FrontConfig,
    source: Source,
    base: SurfacePoint,
    time: f64,
    samples: Vec<Sample>,
    /// Panels `[left, mid, right]` as sample indices, in `omega` order.
    panels: Vec<[usize; 3]>,
    refined: usize,
    max_pair_error: f64,
    peak: f64,
    avoid: Vec<f64>,
    warnings: Vec<String>,
}

/// Directions whose covector lies on a separatrix (`a r cos omega` equal to
/// a hyperbolic Clairaut value).
fn separatrix_directions(surface: &SurfaceModel, ham: &HamiltonianModel, fiber: &Fiber) -> Vec<f64> {
    let radial = Radial::new(surface, ham);
    let Ok(leaves) = classify(&radial) else {
        return Vec::new();
    };
    let h = fiber.clairaut_max();
    let mut out = Vec::new();
    for l in leaves.iter().filter(|l| l.stability == Stability::Hyperbolic) {
        if l.clairaut_value <= h * (1.0 + 1e-12) {
            let cw = (l.clairaut_value / h).min(1.0);
            let w = cw.acos();
            out.extend([w, TAU - w, std::f64::consts::PI - w, std::f64::consts::PI + w]);
        }
    }
    out
}

/// Sample spacing below which a direction counts as landing on a separatrix.
const SEPARATRIX_SNAP: f64 = 1e-12;
/// Panels this narrow in `omega` are not split further.
const MIN_PANEL: f64 = 1e-11;

impl FrontEnsemble {
    /// `n0` equispaced samples on the fiber over `A` at `t = 0`. On a sphere
    /// pole the fiber is parametrized in the pole's Cartesian chart.
    pub fn new(
        ham: &HamiltonianModel,
        surface: &SurfaceModel,
        a: SurfacePoint,
        cfg: FrontConfig,
        integ: IntegratorConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        integ.validate()?;
        let (source, avoid) = if surface.near_pole(a.s) {
            (Source::Pole { north: a.s < 0.5 * surface.length() }, Vec::new())
        } else {
            let fiber = ham.fiber(surface, a)?;
            (Source::Fiber(fiber), separatrix_directions(surface, ham, &fiber))
        };
        let mut ens = Self {
            surface: surface.clone(),
            ham: ham.clone(),
            integ,
            cfg,
            source,
            base: a,
            time: 0.0,
            samples: Vec::new(),
            panels: Vec::new(),
            refined: 0,
            max_pair_error: 0.0,
            peak: 0.0,
            avoid,
            warnings: Vec::new(),
        };
        let n = cfg.n0;
        for i in 0..n {
            let omega = ens.adjust(TAU * i as f64 / n as f64);
            let s = ens.initial(omega)?;
            ens.samples.push(s);
        }
        for k in 0..n / 2 {
            ens.panels.push([2 * k, 2 * k + 1, (2 * k + 2) % n]);
        }
        Ok(ens)
    }

    fn adjust(&mut self, omega: f64) -> f64 {
        for &z in &self.avoid {
            let d = omega - z;
            let d = d - TAU * (d / TAU).round();
            if d.abs() < SEPARATRIX_SNAP {
                let w = omega + 1e-12;
                self.warnings.push(format!("sample omega = {omega} lies on a separatrix direction; moved to {w}"));
                return w;
            }
        }
        omega
    }

    fn initial(&self, omega: f64) -> Result<Sample> {
        match self.source {
            Source::Fiber(f) => Ok(Sample {
                omega,
                state: PhaseState::new(f.point(omega), Some(f.tangent(omega))),
                hint: None,
            }),
            Source::Pole { .. } => Ok(Sample {
                omega,
                // Placeholder; pole samples are only materialized for t > 0.
                state: PhaseState::new(
                    crate::geometry::CotangentPoint::new(omega, self.base.s, 0.0, 0.0),
                    Some([0.0; 4]),
                ),
                hint: None,
            }),
        }
    }

    fn advance_sample(&self, s: &Sample, t0: f64, t1: f64) -> Result<Sample> {
        if t1 == t0 {
            return Ok(*s);
        }
        let (state, h) = match self.source {
            // Pole fronts refocus on the poles; states there are not reused.
            Source::Pole { north } => {
                advance_from_pole(&self.ham, &self.surface, north, s.omega, t1, &self.integ)?
            }
            _ => advance_with_hint(&self.ham, &self.surface, &s.state, t0, t1, &self.integ, s.hint)?,
        };
        Ok(Sample { omega: s.omega, state, hint: Some(h) })
    }

    /// Sample at `omega` integrated from `t = 0` to the current time.
    fn fresh(&self, omega: f64) -> Result<Sample> {
        let s = self.initial(omega)?;
        self.advance_sample(&s, 0.0, self.time)
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Samples inserted by refinement so far.
    pub fn refined_count(&self) -> usize {
        self.refined
    }

    /// Largest trapezoid/Simpson discrepancy of any panel after the last
    /// refinement.
    pub fn max_pair_error(&self) -> f64 {
        self.max_pair_error
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// `(omega, state)` of all samples in `omega` order.
    pub fn states(&self) -> Vec<(f64, PhaseState)> {
        let mut v: Vec<(f64, PhaseState)> = self.samples.iter().map(|s| (s.omega, s.state)).collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        v
    }

    fn integrand(&self, s: &Sample) -> f64 {
        if self.time == 0.0 {
            return 0.0;
        }
        let t = s.state.tangent.expect("front samples carry tangents");
        self.surface.tangent_norm(s.state.point.s, t[0], t[1])
    }

    fn width(&self, p: &[usize; 3]) -> f64 {
        let (a, b) = (self.samples[p[0]].omega, self.samples[p[2]].omega);
        if b < a {
            b - a + TAU
        } else {
            b - a
        }
    }

    /// Geodesic-chart distance between two samples (shortest wrap).
    fn chord(&self, i: usize, j: usize) -> f64 {
        let a = self.samples[i].state.point;
        let b = self.samples[j].state.point;
        let wrap = |d: f64, per: f64| d - per * (d / per).round();
        let dth = wrap(b.theta - a.theta, self.surface.theta_period());
        let ds = if self.surface.is_sphere() { b.s - a.s } else { wrap(b.s - a.s, self.surface.length()) };
        let sm = if self.surface.is_sphere() { 0.5 * (a.s + b.s) } else { a.s + 0.5 * ds };
        self.surface.tangent_norm(sm, dth, ds)
    }

    fn refinable(&self, p: &[usize; 3]) -> bool {
        self.width(p) > MIN_PANEL
    }

    /// `(value, |simpson - trapezoid|)` per panel. Panels at the resolution
    /// limit whose Simpson value is unreliable fall back to chords.
    fn panel_values(&self, f: &[f64], inside: Option<&[bool]>) -> Vec<(f64, f64)> {
        self.panels
            .iter()
            .map(|p| {
                let w = self.width(p);
                let (a, m, b) = (f[p[0]], f[p[1]], f[p[2]]);
                let simpson = w / 6.0 * (a + 4.0 * m + b);
                let trap = w / 4.0 * (a + 2.0 * m + b);
                let err = (simpson - trap).abs();
                if !self.refinable(p) && err > self.cfg.tol_front * simpson.abs() {
                    let weight = |i: usize, j: usize| {
                        inside.map_or(1.0, |v| 0.5 * (v[i] as u8 as f64 + v[j] as u8 as f64))
                    };
                    let c = weight(p[0], p[1]) * self.chord(p[0], p[1]) + weight(p[1], p[2]) * self.chord(p[1], p[2]);
                    return (c, err);
                }
                (simpson, err)
            })
            .collect()
    }

    fn integrands(&self) -> Vec<f64> {
        self.samples.iter().map(|s| self.integrand(s)).collect()
    }

    /// Split panels until every panel meets its share of the tolerance.
    fn refine(&mut self) -> Result<()> {
        loop {
            let f = self.integrands();
            let vals = self.panel_values(&f, None);
            let total: f64 = vals.iter().map(|v| v.0).sum();
            // Near a focus the length collapses; tolerate errors relative to
            // the largest length seen so far.
            self.peak = self.peak.max(total.abs());
            let floor = 1e-6 * self.peak + 1e-12 * self.surface.length();
            let scale = self.cfg.tol_front * total.abs().max(floor);
            // Pair shares of the budget: split the largest panels until the
            // rest carry at most half of it.
            let err_sum: f64 = vals.iter().zip(&self.panels).filter(|(_, p)| self.refinable(p)).map(|(v, _)| v.1).sum();
            let worst = vals.iter().map(|v| v.1).fold(0.0f64, f64::max);
            let mut bad: Vec<usize> = Vec::new();
            if err_sum > scale {
                let mut order: Vec<usize> = (0..vals.len()).collect();
                order.sort_by(|&a, &b| vals[b].1.total_cmp(&vals[a].1).then(a.cmp(&b)));
                let mut rest = err_sum;
                for i in order {
                    if rest <= 0.5 * scale {
                        break;
                    }
                    if self.refinable(&self.panels[i]) {
                        rest -= vals[i].1;
                        bad.push(i);
                    }
                }
                bad.sort_unstable();
            }
            self.max_pair_error = worst;
            if bad.is_empty() {
                return Ok(());
            }
            if self.samples.len() + 2 * bad.len() > self.cfg.max_samples {
                let (i, _) = vals
                    .iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v.1 > acc.1 { (i, v.1) } else { acc });
                let p = self.panels[i];
                return Err(Error::RefinementBudgetExceeded {
                    samples: self.samples.len(),
                    omega_lo: self.samples[p[0]].omega,
                    omega_hi: self.samples[p[2]].omega,
                });
            }
            // New angles: quarter points of each bad panel.
            let mut omegas = Vec::with_capacity(2 * bad.len());
            for &i in &bad {
                let p = self.panels[i];
                let a = self.samples[p[0]].omega;
                let m = self.samples[p[1]].omega;
                let w = self.width(&p);
                let q1 = a + 0.25 * w;
                let q3 = m + 0.25 * w;
                omegas.push(self.adjust(q1.rem_euclid(TAU)));
                omegas.push(self.adjust(q3.rem_euclid(TAU)));
            }
            let new: Vec<Sample> = omegas.par_iter().map(|&w| self.fresh(w)).collect::<Result<_>>()?;
            let mut new_panels = Vec::with_capacity(self.panels.len() + bad.len());
            let mut k = 0;
            let base = self.samples.len();
            let mut bi = bad.iter().peekable();
            for (i, p) in self.panels.iter().enumerate() {
                if bi.peek() == Some(&&i) {
                    bi.next();
                    let (q1, q3) = (base + 2 * k, base + 2 * k + 1);
                    new_panels.push([p[0], q1, p[1]]);
                    new_panels.push([p[1], q3, p[2]]);
                    k += 1;
                } else {
                    new_panels.push(*p);
                }
            }
            self.samples.extend(new);
            self.panels = new_panels;
            self.refined += 2 * bad.len();
        }
    }

    /// Advance all samples to `t_next`, refining at every checkpoint.
    pub fn evolve(&mut self, t_next: f64) -> Result<()> {
        if !(t_next >= self.time) {
            return Err(Error::InvalidInput(format!("evolve needs t_next >= {} (got {t_next})", self.time)));
        }
        while self.time < t_next {
            let dt = self.cfg.checkpoint_dt;
            let next_cp = ((self.time / dt).floor() + 1.0) * dt;
            let t1 = next_cp.min(t_next);
            let t0 = self.time;
            let moved: Vec<Sample> =
                self.samples.par_iter().map(|s| self.advance_sample(s, t0, t1)).collect::<Result<_>>()?;
            self.samples = moved;
            self.time = t1;
            self.refine()?;
        }
        Ok(())
    }

    /// `|S_t|`, or the length of `S_t` inside `mask`.
    pub fn length(&self, mask: Option<&Rect>) -> f64 {
        let inside: Option<Vec<bool>> =
            mask.map(|m| self.samples.iter().map(|s| m.contains(&self.surface, s.state.point.position())).collect());
        let f: Vec<f64> = self
            .samples
            .iter()
            .enumerate()
            .map(|(i, s)| if inside.as_ref().is_some_and(|v| !v[i]) { 0.0 } else { self.integrand(s) })
            .collect();
        let mut acc = CompensatedSum::new();
        for (v, _) in self.panel_values(&f, inside.as_deref()) {
            acc.add(v);
        }
        acc.value()
    }

    /// Chord-sum length of the projected front (diagnostic only).
    pub fn polyline_length(&self) -> f64 {
        let pts = self.states();
        let mut acc = CompensatedSum::new();
        let p = self.surface.theta_period();
        let l = self.surface.length();
        for i in 0..pts.len() {
            let a = self.surface.reduce(pts[i].1.point.position());
            let b = self.surface.reduce(pts[(i + 1) % pts.len()].1.point.position());
            let wrap = |d: f64, per: f64| d - per * (d / per).round();
            let dth = wrap(b.theta - a.theta, p);
            let ds = if self.surface.is_sphere() { b.s - a.s } else { wrap(b.s - a.s, l) };
            acc.add(self.surface.tangent_norm(0.5 * (a.s + b.s), dth, ds));
        }
        acc.value()
    }
}

/// One front run over increasing times.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct LengthSeries {
    pub times: Vec<f64>,
    pub lengths: Vec<f64>,
    pub refined_counts: Vec<usize>,
    pub max_pair_errors: Vec<f64>,
    /// Lengths inside each mask, per time.
    pub masked: Vec<Vec<f64>>,
    pub warnings: Vec<String>,
}

impl LengthSeries {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["t".to_string(), "length".into(), "refined_count".into(), "max_pair_error".into()];
        let nm = self.masked.first().map_or(0, |m| m.len());
        header.extend((0..nm).map(|i| format!("masked_length_{i}")));
        w.write_record(&header).map_err(|e| Error::Io(e.to_string()))?;
        for i in 0..self.times.len() {
            let mut row = vec![
                format!("{:e}", self.times[i]),
                format!("{:e}", self.lengths[i]),
                self.refined_counts[i].to_string(),
                format!("{:e}", self.max_pair_errors[i]),
            ];
            if let Some(m) = self.masked.get(i) {
                row.extend(m.iter().map(|v| format!("{v:e}")));
            }
            w.write_record(&row).map_err(|e| Error::Io(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }
}

/// Evolve one ensemble through `times`, recording lengths (and masked
/// lengths for each rectangle in `masks`).
pub fn length_series(
    ham: &HamiltonianModel,
    surface: &SurfaceModel,
    a: SurfacePoint,
    times: &[f64],
    cfg: FrontConfig,
    integ: IntegratorConfig,
    masks: &[Rect],
) -> Result<LengthSeries> {
    if times.windows(2).any(|w| !(w[1] > w[0])) || times.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::InvalidInput("times must be nonnegative and increasing".into()));
    }
    for m in masks {
        m.validate(surface)?;
    }
    let mut ens = FrontEnsemble::new(ham, surface, a, cfg, integ)?;
    let mut out = LengthSeries::default();
    for &t in times {
        ens.evolve(t)?;
        out.times.push(t);
        out.lengths.push(ens.length(None));
        out.refined_counts.push(ens.refined_count());
        out.max_pair_errors.push(ens.max_pair_error());
        out.masked.push(masks.iter().map(|m| ens.length(Some(m))).collect());
    }
    out.warnings = ens.warnings().to_vec();
    Ok(out)
}

/// `n` log-spaced times ending at `horizon`, starting at `horizon / 500`
/// (or `t_min` if given).
pub fn log_times(horizon: f64, n: usize, t_min: Option<f64>) -> Vec<f64> {
    let lo = t_min.unwrap_or(horizon / 500.0).ln();
    let hi = horizon.ln();
    (0..n)
        .map(|i| if i + 1 == n { horizon } else { (lo + (hi - lo) * i as f64 / (n - 1).max(1) as f64).exp() })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SlopeEstimate {
    pub slope: f64,
    pub uncertainty: f64,
    pub points: usize,
}

/// Least-squares slope of `|S_t|` against `t` over the last `tail_fraction`
/// of the points; the uncertainty is `max |(|S_t| / t) - slope|` there.
pub fn slope_estimate(times: &[f64], lengths: &[f64], tail_fraction: f64) -> Result<SlopeEstimate> {
    let n = times.len().min(lengths.len());
    let k = ((tail_fraction * n as f64).round() as usize).min(n);
    if k < 8 {
        return Err(Error::InsufficientTail { points: k, required: 8 });
    }
    let t = &times[n - k..n];
    let y = &lengths[n - k..n];
    let tm = t.iter().sum::<f64>() / k as f64;
    let ym = y.iter().sum::<f64>() / k as f64;
    let sxy: f64 = t.iter().zip(y).map(|(a, b)| (a - tm) * (b - ym)).sum();
    let sxx: f64 = t.iter().map(|a| (a - tm) * (a - tm)).sum();
    let slope = sxy / sxx;
    let uncertainty = t.iter().zip(y).map(|(a, b)| (b / a - slope).abs()).fold(0.0, f64::max);
    Ok(SlopeEstimate { slope, uncertainty, points: k })
}
