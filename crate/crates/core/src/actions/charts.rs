//! Enumeration of the connected families of invariant tori.
//!
//! For Clairaut value `c` with `m = c^2`, the tori are indexed by the
//! connected components of `{ q > m }`: an interval carries one oscillating
//! torus, the whole circle carries two circulating ones (one per sign of
//! `p_s`). Components change only when `m` crosses a critical value of `q`.
//! Every chart is further split at `c = 0`, so its Clairaut interval has a
//! definite sign.

use serde::Serialize;

use super::singular::{critical_points, Radial};
use crate::error::{Error, Result};
use crate::geometry::SurfaceKind;
use crate::quad::brent;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Oscillating,
    Circulating,
    /// Flat torus: the leaf space is the circle of directions.
    Flat,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Boundary {
    /// Torus family collapses onto an elliptic periodic orbit.
    Elliptic { s: f64 },
    /// Family limits on a separatrix of the hyperbolic orbit(s) at `s`.
    Hyperbolic { s: Vec<f64> },
    /// `c -> 0` on a component touching a sphere pole.
    FiberDegenerate,
    /// `c = 0` split of a family that continues smoothly.
    Regular,
}

impl Boundary {
    pub fn is_hyperbolic(&self) -> bool {
        matches!(self, Boundary::Hyperbolic { .. })
    }

    /// Critical points whose level equals this end's `c^2`.
    pub fn refs(&self) -> &[f64] {
        match self {
            Boundary::Elliptic { s } => std::slice::from_ref(s),
            Boundary::Hyperbolic { s } => s,
            _ => &[],
        }
    }
}

/// One connected family of tori, parametrized by `c = p_theta` over
/// `sign * (kappa_lo, kappa_hi)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LeafChart {
    pub id: usize,
    pub regime: Regime,
    /// Sign of `c` on the chart.
    pub c_sign: f64,
    /// Direction of `s`-circulation (`0` for oscillating charts).
    pub ps_sign: f64,
    pub kappa_lo: f64,
    pub kappa_hi: f64,
    pub lo: Boundary,
    pub hi: Boundary,
    /// Argmax of `q` over the component (oscillating charts).
    pub anchor: f64,
    /// Critical points inside the component.
    pub crit: Vec<f64>,
}

impl LeafChart {
    /// Clairaut interval `(c_min, c_max)`.
    pub fn c_range(&self) -> (f64, f64) {
        if self.c_sign > 0.0 {
            (self.kappa_lo, self.kappa_hi)
        } else {
            (-self.kappa_hi, -self.kappa_lo)
        }
    }

    pub fn width(&self) -> f64 {
        self.kappa_hi - self.kappa_lo
    }

    pub fn contains(&self, c: f64) -> bool {
        let (a, b) = self.c_range();
        c > a && c < b
    }

    /// Distance from `|c|` to the nearest end that is not a plain split.
    pub fn distance_to_singular_end(&self, kappa: f64) -> f64 {
        let mut d = f64::INFINITY;
        if self.lo != Boundary::Regular {
            d = d.min(kappa - self.kappa_lo);
        }
        if self.hi != Boundary::Regular {
            d = d.min(self.kappa_hi - kappa);
        }
        d
    }
}

/// A point of a chart, measured from one of its ends so that offsets near a
/// critical level keep full relative precision.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ChartPoint {
    /// `kappa = kappa_lo + x`.
    FromLo(f64),
    /// `kappa = kappa_hi - x`.
    FromHi(f64),
}

impl ChartPoint {
    /// Best representation of `kappa = |c|`.
    pub fn from_kappa(chart: &LeafChart, kappa: f64) -> Self {
        let lo_ref = !chart.lo.refs().is_empty();
        let hi_ref = !chart.hi.refs().is_empty();
        let dlo = kappa - chart.kappa_lo;
        let dhi = chart.kappa_hi - kappa;
        if hi_ref && (!lo_ref || dhi < dlo) {
            ChartPoint::FromHi(dhi)
        } else {
            ChartPoint::FromLo(dlo)
        }
    }

    pub fn kappa(&self, chart: &LeafChart) -> f64 {
        match *self {
            ChartPoint::FromLo(x) => chart.kappa_lo + x,
            ChartPoint::FromHi(x) => chart.kappa_hi - x,
        }
    }

    pub fn offset(&self) -> f64 {
        match *self {
            ChartPoint::FromLo(x) | ChartPoint::FromHi(x) => x,
        }
    }

    pub fn shifted(&self, dkappa: f64) -> Self {
        match *self {
            ChartPoint::FromLo(x) => ChartPoint::FromLo(x + dkappa),
            ChartPoint::FromHi(x) => ChartPoint::FromHi(x - dkappa),
        }
    }
}

/// `G(s) = q(s) - c^2` evaluated relative to reference critical points at a
/// nearby level, so that `G` keeps relative accuracy where `q ~ c^2`.
#[derive(Clone, Debug)]
pub struct Level<'r> {
    pub radial: Radial<'r>,
    pub kappa: f64,
    /// `(s_ref, c^2 - q(s_ref))`; without references `G = q - c^2` directly.
    refs: Vec<(f64, f64)>,
}

impl<'r> Level<'r> {
    pub fn plain(radial: Radial<'r>, kappa: f64) -> Self {
        Self { radial, kappa, refs: Vec::new() }
    }

    pub fn at(radial: Radial<'r>, chart: &LeafChart, pt: ChartPoint) -> Self {
        let (end_kappa, refs, sign, x) = match pt {
            ChartPoint::FromLo(x) => (chart.kappa_lo, chart.lo.refs(), 1.0, x),
            ChartPoint::FromHi(x) => (chart.kappa_hi, chart.hi.refs(), -1.0, x),
        };
        let kappa = pt.kappa(chart);
        let dk = sign * x;
        let refs = refs
            .iter()
            .map(|&r| {
                let rsd = (-end_kappa).mul_add(end_kappa, radial.q(r));
                // c^2 - q_ref = (kappa - k_end)(kappa + k_end) - (q_ref - k_end^2)
                (r, dk * (2.0 * end_kappa + dk) - rsd)
            })
            .collect();
        Self { radial, kappa, refs }
    }

    pub fn g(&self, s: f64) -> f64 {
        if self.refs.is_empty() {
            return self.radial.q(s) - self.kappa * self.kappa;
        }
        let l = self.radial.length();
        let torus = self.radial.surface.kind() != SurfaceKind::RevolutionSphere;
        let wrap = |d: f64| if torus { d - l * (d / l).round() } else { d };
        let (r, dm) = self
            .refs
            .iter()
            .copied()
            .min_by(|a, b| wrap(s - a.0).abs().total_cmp(&wrap(s - b.0).abs()))
            .expect("non-empty refs");
        self.radial.dq(r, wrap(s - r)) - dm
    }
}

/// Turning points of an oscillating component: `s_minus < anchor < s_plus`
/// on the unwrapped line (on the torus `s_minus` may be negative). `nodes`
/// are all critical points of `q`, between which `q` is monotone.
pub fn turning_points(level: &Level, chart: &LeafChart, nodes: &[f64]) -> Result<(f64, f64)> {
    let l = level.radial.length();
    let sphere = level.radial.surface.kind() == SurfaceKind::RevolutionSphere;
    let fail = || Error::TurningPointFailure { clairaut: chart.c_sign * level.kappa };
    let anchor = chart.anchor;
    let g = |s: f64| level.g(s);
    if !(g(anchor) > 0.0) {
        return Err(fail());
    }
    let eps = 1e-12 * l;
    let search = |dir: f64| -> Result<f64> {
        let mut pts: Vec<f64> = if sphere {
            let mut v = vec![0.0];
            v.extend_from_slice(nodes);
            v.push(l);
            v
        } else {
            (-2..=2).flat_map(|k| nodes.iter().map(move |&n| n + k as f64 * l)).collect()
        };
        pts.retain(|&n| dir * (n - anchor) > eps && (sphere || (n - anchor).abs() <= l + eps));
        pts.sort_by(|a, b| (dir * a).total_cmp(&(dir * b)));
        let mut prev = anchor;
        for n in pts {
            if g(n) <= 0.0 {
                let (a, b) = if dir > 0.0 { (prev, n) } else { (n, prev) };
                return brent(g, a, b, 0.0).ok_or_else(fail);
            }
            prev = n;
        }
        Err(fail())
    };
    let sp = search(1.0)?;
    let sm = search(-1.0)?;
    Ok((sm, sp))
}

/// Components of `{q > m}` as runs of node indices: `(run, whole circle,
/// reaches a pole as m -> 0)`.
fn components(sphere: bool, qs: &[f64], m: f64) -> Vec<(Vec<usize>, bool, bool)> {
    let n = qs.len();
    let above: Vec<bool> = qs.iter().map(|&q| q > m).collect();
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    if sphere {
        let mut i = 0;
        while i < n {
            if above[i] {
                let start = i;
                while i < n && above[i] {
                    i += 1;
                }
                out.push(((start..i).collect(), false, start == 0 || i == n));
            } else {
                i += 1;
            }
        }
        return out;
    }
    if above.iter().all(|&b| b) {
        out.push(((0..n).collect(), true, false));
        return out;
    }
    let first_below = above.iter().position(|&b| !b).unwrap_or(0);
    let mut k = 0;
    while k < n {
        let i = (first_below + k) % n;
        if above[i] {
            let mut run = Vec::new();
            while k < n && above[(first_below + k) % n] {
                run.push((first_below + k) % n);
                k += 1;
            }
            out.push((run, false, false));
        } else {
            k += 1;
        }
    }
    out
}

/// All critical points of `q` (any sign), the breakpoints of monotonicity.
pub fn nodes(radial: &Radial) -> Result<Vec<f64>> {
    Ok(critical_points(radial)?.into_iter().map(|(s, _)| s).collect())
}

/// Enumerate all torus families at the model's energy.
pub fn enumerate(radial: &Radial) -> Result<Vec<LeafChart>> {
    if radial.is_flat() {
        return Ok(vec![LeafChart {
            id: 0,
            regime: Regime::Flat,
            c_sign: 1.0,
            ps_sign: 0.0,
            kappa_lo: 0.0,
            kappa_hi: 0.0,
            lo: Boundary::Regular,
            hi: Boundary::Regular,
            anchor: 0.0,
            crit: Vec::new(),
        }]);
    }
    let crit = critical_points(radial)?;
    if crit.iter().all(|(_, d)| d[0] <= 0.0) {
        return Err(Error::Unsupported("no region with q > 0".into()));
    }
    let sphere = radial.surface.kind() == SurfaceKind::RevolutionSphere;
    let qs: Vec<f64> = crit.iter().map(|(_, d)| d[0]).collect();
    let mut levels: Vec<f64> = qs.iter().copied().filter(|&q| q > 0.0).collect();
    levels.push(0.0);
    levels.sort_by(f64::total_cmp);
    levels.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * b.abs());

    struct Family {
        run: Vec<usize>,
        circle: bool,
        touches: bool,
        m_lo: f64,
        m_hi: f64,
    }
    let mut fams: Vec<Family> = Vec::new();
    for w in levels.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        for (run, circle, touches) in components(sphere, &qs, mid) {
            if let Some(f) = fams.iter_mut().find(|f| f.run == run && f.circle == circle && f.m_hi == w[0]) {
                f.m_hi = w[1];
            } else {
                fams.push(Family { run, circle, touches, m_lo: w[0], m_hi: w[1] });
            }
        }
    }
    let at_level = |m: f64, idx: &mut dyn Iterator<Item = usize>| -> Vec<f64> {
        let mut v: Vec<f64> = idx
            .filter(|&i| qs[i] > 0.0 && (qs[i] - m).abs() <= 1e-12 * m)
            .map(|i| crit[i].0)
            .collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    };
    let n = crit.len();
    let mut charts = Vec::new();
    for f in &fams {
        let crit_s: Vec<f64> = f.run.iter().map(|&i| crit[i].0).collect();
        let anchor_idx = *f
            .run
            .iter()
            .max_by(|&&i, &&j| qs[i].total_cmp(&qs[j]))
            .expect("non-empty component");
        let lo = if f.m_lo == 0.0 {
            if f.touches {
                Boundary::FiberDegenerate
            } else {
                Boundary::Regular
            }
        } else if f.circle {
            Boundary::Hyperbolic { s: at_level(f.m_lo, &mut f.run.iter().copied()) }
        } else {
            // Saddles just outside the run, where it merges with a neighbour.
            let first = f.run[0];
            let last = *f.run.last().expect("non-empty");
            let nb: Vec<usize> = if sphere {
                [first.checked_sub(1), (last + 1 < n).then_some(last + 1)].into_iter().flatten().collect()
            } else {
                vec![(first + n - 1) % n, (last + 1) % n]
            };
            Boundary::Hyperbolic { s: at_level(f.m_lo, &mut nb.into_iter()) }
        };
        // At the top level the family either shrinks onto its maximum or
        // splits at an interior saddle.
        let hi = if f.circle {
            Boundary::Hyperbolic { s: at_level(f.m_hi, &mut (0..n)) }
        } else {
            let saddles: Vec<f64> = f
                .run
                .iter()
                .copied()
                .filter(|&i| crit[i].1[2] > 0.0 && qs[i] > 0.0 && (qs[i] - f.m_hi).abs() <= 1e-12 * f.m_hi)
                .map(|i| crit[i].0)
                .collect();
            if saddles.is_empty() {
                Boundary::Elliptic { s: crit[anchor_idx].0 }
            } else {
                Boundary::Hyperbolic { s: saddles }
            }
        };
        let kappa_lo = f.m_lo.sqrt();
        let kappa_hi = f.m_hi.sqrt();
        let regimes: &[(Regime, f64)] = if f.circle {
            &[(Regime::Circulating, 1.0), (Regime::Circulating, -1.0)]
        } else {
            &[(Regime::Oscillating, 0.0)]
        };
        for &(regime, ps_sign) in regimes {
            for c_sign in [1.0, -1.0] {
                charts.push(LeafChart {
                    id: 0,
                    regime,
                    c_sign,
                    ps_sign,
                    kappa_lo,
                    kappa_hi,
                    lo: lo.clone(),
                    hi: hi.clone(),
                    anchor: crit[anchor_idx].0,
                    crit: crit_s.clone(),
                });
            }
        }
    }
    charts.sort_by(|a, b| {
        (a.regime == Regime::Oscillating)
            .cmp(&(b.regime == Regime::Oscillating))
            .then(a.c_range().0.total_cmp(&b.c_range().0))
            .then(b.ps_sign.total_cmp(&a.ps_sign))
    });
    for (i, c) in charts.iter_mut().enumerate() {
        c.id = i;
    }
    Ok(charts)
}
