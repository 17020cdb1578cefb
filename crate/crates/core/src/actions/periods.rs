//! Period integrals of the `s`-motion, frequencies, the slope density and
//! the inverse angle map.
//!
//! Along a torus `p_s = sqrt(G)/a` with `G = q - c^2`, `ds/dt = p_s` and
//! `dtheta/dt = c/a^2`. Integrals are taken over one loop of the
//! `s`-motion; near turning points `s = s_turn +- u^2` removes the inverse
//! square root.

use serde::Serialize;

use super::charts::{turning_points, ChartPoint, LeafChart, Level, Regime};
use super::singular::Radial;
use super::{ActionData, Actions, HAAR_MASS};
use crate::error::{Error, Result};
use crate::geometry::{rem, CotangentPoint, Rect, SurfaceKind};
use crate::quad::{brent, integrate_vec, QuadTol};

/// Shape of the `s`-loop.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Geom {
    /// Back and forth between turning points `s_minus < s_plus`.
    Oscillating { s_minus: f64, s_plus: f64 },
    /// Once around `[base, base + L]`.
    Circulating { base: f64 },
}

/// Period data of one torus.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Torus {
    pub c: f64,
    pub geom: Geom,
    /// Period of the `s`-motion.
    pub period: f64,
    /// Advance of `theta` over one `s`-period.
    pub theta_advance: f64,
    /// `loop integral of p_s ds`, so that `p2 = j2 / 2 pi`.
    pub j2: f64,
}

/// `int f(s, sqrt G) ds` over `s = turn + dir u^2`, `u^2` in `[d0, d1]`.
fn turn_integral<const M: usize, F: Fn(f64, f64) -> [f64; M]>(
    radial: &Radial,
    turn: f64,
    dir: f64,
    d0: f64,
    d1: f64,
    f: &F,
    tol: QuadTol,
) -> Result<[f64; M]> {
    integrate_vec(
        |u| {
            let d = dir * u * u;
            let g = radial.dq(turn, d);
            let v = f(turn + d, g.max(0.0).sqrt());
            v.map(|x| 2.0 * u * x)
        },
        d0.max(0.0).sqrt(),
        d1.sqrt(),
        tol,
    )
}

fn plain_integral<const M: usize, F: Fn(f64, f64) -> [f64; M]>(
    level: &Level,
    a: f64,
    b: f64,
    f: &F,
    tol: QuadTol,
) -> Result<[f64; M]> {
    integrate_vec(|s| f(s, level.g(s).max(0.0).sqrt()), a, b, tol)
}

fn add<const M: usize>(x: &mut [f64; M], y: [f64; M]) {
    for (a, b) in x.iter_mut().zip(y) {
        *a += b;
    }
}

/// Pieces of `[lo, hi]` covered by the periodic (or plain) interval `mask`.
fn clip(lo: f64, hi: f64, mask: Option<[f64; 2]>, period: Option<f64>) -> Vec<(f64, f64)> {
    let Some([m0, m1]) = mask else {
        return vec![(lo, hi)];
    };
    let mut out = Vec::new();
    match period {
        None => {
            let (a, b) = (lo.max(m0), hi.min(m1));
            if b > a {
                out.push((a, b));
            }
        }
        Some(l) => {
            let k0 = ((lo - m1) / l).floor() as i64;
            let k1 = ((hi - m0) / l).ceil() as i64;
            for k in k0..=k1 {
                let (a, b) = (lo.max(m0 + k as f64 * l), hi.min(m1 + k as f64 * l));
                if b > a {
                    out.push((a, b));
                }
            }
        }
    }
    out
}

impl Actions {
    pub(crate) fn level(&self, chart: &LeafChart, pt: ChartPoint) -> Level<'_> {
        Level::at(self.radial(), chart, pt)
    }

    fn s_period(&self) -> Option<f64> {
        (self.surface.kind() != SurfaceKind::RevolutionSphere).then(|| self.surface.length())
    }

    /// Loop integral of `f(s, sqrt G)` over the torus, optionally restricted
    /// to `s` in `mask`.
    fn loop_integral<const M: usize, F: Fn(f64, f64) -> [f64; M]>(
        &self,
        level: &Level,
        chart: &LeafChart,
        geom: Geom,
        f: F,
        mask: Option<[f64; 2]>,
        tol: QuadTol,
    ) -> Result<[f64; M]> {
        let radial = &level.radial;
        let mut acc = [0.0; M];
        match geom {
            Geom::Oscillating { s_minus, s_plus } => {
                let mid = 0.5 * (s_minus + s_plus);
                for (a, b) in clip(s_minus, mid, mask, self.s_period()) {
                    add(&mut acc, turn_integral(radial, s_minus, 1.0, a - s_minus, b - s_minus, &f, tol)?);
                }
                for (a, b) in clip(mid, s_plus, mask, self.s_period()) {
                    add(&mut acc, turn_integral(radial, s_plus, -1.0, s_plus - b, s_plus - a, &f, tol)?);
                }
                Ok(acc.map(|x| 2.0 * x))
            }
            Geom::Circulating { base } => {
                let l = self.surface.length();
                let mut cuts: Vec<f64> = vec![base, base + l];
                for &r in chart.hi.refs() {
                    let r = base + rem(r - base, l);
                    if r > base && r < base + l {
                        cuts.push(r);
                    }
                }
                cuts.sort_by(f64::total_cmp);
                for w in cuts.windows(2) {
                    for (a, b) in clip(w[0], w[1], mask, self.s_period()) {
                        add(&mut acc, plain_integral(level, a, b, &f, tol)?);
                    }
                }
                Ok(acc)
            }
        }
    }

    fn geom(&self, level: &Level, chart: &LeafChart) -> Result<Geom> {
        match chart.regime {
            Regime::Oscillating => {
                let (s_minus, s_plus) = turning_points(level, chart, &self.nodes)?;
                Ok(Geom::Oscillating { s_minus, s_plus })
            }
            Regime::Circulating => {
                let base = chart.hi.refs().first().copied().unwrap_or(0.0);
                Ok(Geom::Circulating { base })
            }
            Regime::Flat => Err(Error::InvalidInput("flat chart has no s-motion".into())),
        }
    }

    fn torus_from_level(&self, level: &Level, chart: &LeafChart, c: f64) -> Result<Torus> {
        let geom = self.geom(level, chart)?;
        let radial = &level.radial;
        let [period, theta_advance, j2] = self.loop_integral(
            level,
            chart,
            geom,
            |s, sg| {
                let a = radial.a(s);
                [a / sg, c / (a * sg), sg / a]
            },
            None,
            self.period_tol(),
        )?;
        Ok(Torus { c, geom, period, theta_advance, j2 })
    }

    /// Period data at a chart point.
    pub fn torus_at(&self, chart: &LeafChart, pt: ChartPoint) -> Result<Torus> {
        let level = self.level(chart, pt);
        let c = chart.c_sign * level.kappa;
        self.torus_from_level(&level, chart, c)
    }

    pub fn torus(&self, chart: &LeafChart, sigma: f64) -> Result<Torus> {
        self.torus_at(chart, self.point(chart, sigma)?)
    }

    /// Frequencies in cycles per unit time from the period integrals.
    pub fn nu_at(&self, chart: &LeafChart, pt: ChartPoint) -> Result<[f64; 2]> {
        let t = self.torus_at(chart, pt)?;
        Ok(self.nu_of(&t))
    }

    fn nu_of(&self, t: &Torus) -> [f64; 2] {
        [t.theta_advance / (self.theta_period() * t.period), 1.0 / t.period]
    }

    fn flat_nu(&self, omega: f64) -> [f64; 2] {
        let r = self.flat_radius();
        [r * omega.cos(), r * omega.sin()]
    }

    /// `d nu / d kappa` by Richardson-extrapolated central differences.
    pub fn dnu_dkappa(&self, chart: &LeafChart, pt: ChartPoint) -> Result<[f64; 2]> {
        let kappa = pt.kappa(chart);
        let h = (1e-4 * chart.width()).min(1e-2 * chart.distance_to_singular_end(kappa));
        let d = |h: f64| -> Result<[f64; 2]> {
            let p = self.nu_at(chart, pt.shifted(h))?;
            let m = self.nu_at(chart, pt.shifted(-h))?;
            Ok([(p[0] - m[0]) / (2.0 * h), (p[1] - m[1]) / (2.0 * h)])
        };
        let d1 = d(h)?;
        let d2 = d(0.5 * h)?;
        Ok([(4.0 * d2[0] - d1[0]) / 3.0, (4.0 * d2[1] - d1[1]) / 3.0])
    }

    /// Actions, frequencies and `d nu / d sigma`.
    pub fn action_data(&self, chart: &LeafChart, sigma: f64) -> Result<ActionData> {
        if chart.regime == Regime::Flat {
            let r = self.flat_radius();
            return Ok(ActionData {
                p1: r * sigma.cos(),
                p2: r * sigma.sin(),
                nu: self.flat_nu(sigma),
                dnu_dsigma: [-r * sigma.sin(), r * sigma.cos()],
            });
        }
        let pt = self.point(chart, sigma)?;
        let t = self.torus_at(chart, pt)?;
        let w = self.dnu_dkappa(chart, pt)?;
        let k = chart.c_sign / self.theta_period();
        Ok(ActionData {
            p1: sigma,
            p2: t.j2 / std::f64::consts::TAU,
            nu: self.nu_of(&t),
            dnu_dsigma: [k * w[0], k * w[1]],
        })
    }

    /// Second action `p2 = (1 / 2 pi) loop integral of p_s ds`.
    pub fn action_p2(&self, chart: &LeafChart, sigma: f64) -> Result<f64> {
        if chart.regime == Regime::Flat {
            return Ok(self.flat_radius() * sigma.sin());
        }
        Ok(self.torus(chart, sigma)?.j2 / std::f64::consts::TAU)
    }

    pub fn p2_at(&self, chart: &LeafChart, pt: ChartPoint) -> Result<f64> {
        Ok(self.torus_at(chart, pt)?.j2 / std::f64::consts::TAU)
    }

    /// `J2` at Clairaut value `c` and energy `e`, without chart references.
    fn j2_plain(&self, chart: &LeafChart, c: f64, e: f64) -> Result<f64> {
        let radial = Radial { energy: e, ..self.radial() };
        let level = Level::plain(radial, c.abs());
        Ok(self.torus_from_level(&level, chart, c)?.j2)
    }

    /// Frequencies by both routes: period integrals, and implicit
    /// differentiation of `p2(p1, E)`. Fails with `RouteMismatch` if they
    /// disagree beyond the route tolerance.
    pub fn frequencies(&self, chart: &LeafChart, sigma: f64) -> Result<[f64; 2]> {
        if chart.regime == Regime::Flat {
            return Ok(self.flat_nu(sigma));
        }
        let pt = self.point(chart, sigma)?;
        let nu = self.nu_at(chart, pt)?;
        let alt = self.frequencies_implicit(chart, sigma)?;
        let scale = nu[0].hypot(nu[1]);
        let gap = (nu[0] - alt[0]).hypot(nu[1] - alt[1]) / scale;
        if !(gap <= self.tol.route_rel) {
            return Err(Error::RouteMismatch { p1: sigma, gap });
        }
        Ok(nu)
    }

    /// `nu2 = 1 / (2 pi dp2/dE)`, `nu1 = -(dp2/dp1) / (2 pi dp2/dE)`.
    pub fn frequencies_implicit(&self, chart: &LeafChart, sigma: f64) -> Result<[f64; 2]> {
        self.point(chart, sigma)?;
        let p = self.theta_period();
        let c = sigma / p;
        let e = self.ham.energy();
        let kappa = c.abs();
        let hc = (1e-3 * chart.width()).min(1e-2 * chart.distance_to_singular_end(kappa));
        let dm = 2.0 * kappa * hc + hc * hc;
        let amax = self.surface.profile().range_on(0.0, self.surface.length()).1;
        let he = dm / (2.0 * amax * amax);
        let rich = |f: &dyn Fn(f64) -> Result<f64>, h: f64| -> Result<f64> {
            let d = |h: f64| -> Result<f64> { Ok((f(h)? - f(-h)?) / (2.0 * h)) };
            let d1 = d(h)?;
            let d2 = d(0.5 * h)?;
            Ok((4.0 * d2 - d1) / 3.0)
        };
        let dj_dc = rich(&|h| self.j2_plain(chart, c + h, e), hc)?;
        let dj_de = rich(&|h| self.j2_plain(chart, c, e + h), he)?;
        // p2 = J2 / 2 pi and p1 = P c.
        let dp2_dp1 = dj_dc / (std::f64::consts::TAU * p);
        let dp2_de = dj_de / std::f64::consts::TAU;
        let k = 1.0 / (std::f64::consts::TAU * dp2_de);
        Ok([-dp2_dp1 * std::f64::consts::TAU * k, k])
    }

    /// Torus-averaged `g`-norm of the front direction `D Psi . W` for a
    /// given `W = d nu / d kappa`, optionally restricted to a rectangle.
    fn density_with(&self, chart: &LeafChart, pt: ChartPoint, t: &Torus, w: [f64; 2], mask: Option<&Rect>) -> Result<f64> {
        let level = self.level(chart, pt);
        let radial = &level.radial;
        let p = self.theta_period();
        let (period, adv, c) = (t.period, t.theta_advance, t.c);
        let (frac, smask) = match mask {
            Some(r) => (r.theta_fraction(&self.surface), Some(r.s)),
            None => (1.0, None),
        };
        let [v] = self.loop_integral(
            &level,
            chart,
            t.geom,
            |s, sg| {
                let a = radial.a(s);
                let v1 = p * w[0] + w[1] * (period * c / (a * a) - adv);
                let vs = period * w[1] * sg / a;
                [a * (a * a * v1 * v1 + vs * vs).sqrt() / sg]
            },
            smask,
            QuadTol { abs: 0.0, rel: 1e-9, max_intervals: 4000 },
        )?;
        Ok(HAAR_MASS * frac * v / period)
    }

    /// Slope density per unit `kappa = |c|` at a chart point.
    pub fn density_kappa(&self, chart: &LeafChart, pt: ChartPoint, mask: Option<&Rect>) -> Result<f64> {
        let t = self.torus_at(chart, pt)?;
        let w = self.dnu_dkappa(chart, pt)?;
        self.density_with(chart, pt, &t, w, mask)
    }

    /// Density per unit `nu2` (`D / |d nu2 / d kappa|`) and `nu2` itself;
    /// this is the form that stays bounded at hyperbolic ends.
    pub(crate) fn density_per_nu2(&self, chart: &LeafChart, pt: ChartPoint, mask: Option<&Rect>) -> Result<(f64, f64)> {
        let t = self.torus_at(chart, pt)?;
        let w = self.dnu_dkappa(chart, pt)?;
        let d = self.density_with(chart, pt, &t, [w[0] / w[1].abs(), w[1] / w[1].abs()], mask)?;
        Ok((d, 1.0 / t.period))
    }

    /// Slope density `|d sigma|` per unit `sigma`.
    pub fn density_dsigma(&self, chart: &LeafChart, sigma: f64) -> Result<f64> {
        if chart.regime == Regime::Flat {
            return Ok(HAAR_MASS * self.flat_radius());
        }
        let pt = self.point(chart, sigma)?;
        Ok(self.density_kappa(chart, pt, None)? / self.theta_period())
    }

    /// Density with a user-supplied `W = d nu / d sigma`, for checks under
    /// reparametrization of the chart.
    pub fn density_for_w(&self, chart: &LeafChart, sigma: f64, w: [f64; 2]) -> Result<f64> {
        if chart.regime == Regime::Flat {
            return Ok(HAAR_MASS * w[0].hypot(w[1]));
        }
        let pt = self.point(chart, sigma)?;
        let t = self.torus_at(chart, pt)?;
        let p = self.theta_period();
        let k = chart.c_sign * p;
        Ok(self.density_with(chart, pt, &t, [k * w[0], k * w[1]], None)? / p)
    }

    /// Grid cross-check of `density_dsigma`: mean over an `n x n` angle grid
    /// of `|D Psi(theta) . W|_g`, with the derivative of the inverse angle
    /// map taken by central differences.
    pub fn density_grid(&self, chart: &LeafChart, sigma: f64, n: usize) -> Result<f64> {
        let w = self.action_data(chart, sigma)?.dnu_dsigma;
        let wn = w[0].hypot(w[1]);
        if wn == 0.0 {
            return Ok(0.0);
        }
        let eps = 1e-5 / wn;
        let p = self.theta_period();
        let l = self.surface.length();
        let mut acc = crate::quad::CompensatedSum::new();
        for i in 0..n {
            for j in 0..n {
                let th = [(i as f64 + 0.5) / n as f64, (j as f64 + 0.5) / n as f64];
                let xp = self.torus_chart(chart, sigma, [th[0] + eps * w[0], th[1] + eps * w[1]])?;
                let xm = self.torus_chart(chart, sigma, [th[0] - eps * w[0], th[1] - eps * w[1]])?;
                let x0 = self.torus_chart(chart, sigma, th)?;
                let wrap = |d: f64, per: f64| d - per * (d / per).round();
                let dth = wrap(xp.theta - xm.theta, p) / (2.0 * eps);
                let ds = if self.surface.is_sphere() { xp.s - xm.s } else { wrap(xp.s - xm.s, l) } / (2.0 * eps);
                acc.add(self.surface.tangent_norm(x0.s, dth, ds));
            }
        }
        Ok(HAAR_MASS * acc.value() / (n * n) as f64)
    }

    /// Inverse angle map: the covector with angles `theta` on torus `sigma`.
    /// `theta = 0` is the lower turning point with `theta_geo = 0`.
    pub fn torus_chart(&self, chart: &LeafChart, sigma: f64, theta: [f64; 2]) -> Result<CotangentPoint> {
        let p = self.theta_period();
        if chart.regime == Regime::Flat {
            let r = self.flat_radius();
            return Ok(CotangentPoint::new(rem(theta[0], 1.0), rem(theta[1], 1.0), r * sigma.cos(), r * sigma.sin()));
        }
        let pt = self.point(chart, sigma)?;
        let level = self.level(chart, pt);
        let t = self.torus_from_level(&level, chart, chart.c_sign * level.kappa)?;
        let radial = &level.radial;
        let c = t.c;
        let tau = t.period * rem(theta[1], 1.0);
        let tol = self.period_tol();
        let f = |s: f64, sg: f64| {
            let a = radial.a(s);
            [a / sg, c / (a * sg)]
        };
        let (s, ps, dtheta) = match t.geom {
            Geom::Oscillating { s_minus, s_plus } => {
                let mid = 0.5 * (s_minus + s_plus);
                let half = 0.5 * t.period;
                // Time and angle from s_minus to s along p_s > 0.
                let partial = |s: f64| -> Result<[f64; 2]> {
                    if s <= mid {
                        turn_integral(radial, s_minus, 1.0, 0.0, s - s_minus, &f, tol)
                    } else {
                        let r = turn_integral(radial, s_plus, -1.0, 0.0, s_plus - s, &f, tol)?;
                        Ok([half - r[0], 0.5 * t.theta_advance - r[1]])
                    }
                };
                let (target, up) = if tau <= half { (tau, true) } else { (t.period - tau, false) };
                let s = invert(&partial, target, s_minus, s_plus)?;
                let th = partial(s)?[1];
                let sg = level.g(s).max(0.0).sqrt();
                let a = radial.a(s);
                if up {
                    (s, sg / a, th)
                } else {
                    (s, -sg / a, t.theta_advance - th)
                }
            }
            Geom::Circulating { .. } => {
                let l = self.surface.length();
                let partial = |s: f64| plain_integral(&level, 0.0, s, &f, tol);
                let up = chart.ps_sign > 0.0;
                let target = if up { tau } else { t.period - tau };
                let s = invert(&partial, target, 0.0, l)?;
                let th = partial(s)?[1];
                let sg = level.g(s).max(0.0).sqrt();
                let a = radial.a(s);
                if up {
                    (s, sg / a, th)
                } else {
                    (s, -sg / a, t.theta_advance - th)
                }
            }
        };
        let theta_geo = p * theta[0] - t.theta_advance * tau / t.period + dtheta;
        let s = if self.surface.is_sphere() { s } else { rem(s, self.surface.length()) };
        Ok(CotangentPoint::new(rem(theta_geo, p), s, c, ps))
    }
}

/// Solve `time(s) = target` for monotone `time` on `[lo, hi]`.
fn invert<F: Fn(f64) -> Result<[f64; 2]>>(partial: &F, target: f64, lo: f64, hi: f64) -> Result<f64> {
    let mut err = None;
    let r = brent(
        |s| match partial(s) {
            Ok(v) => v[0] - target,
            Err(e) => {
                err = Some(e);
                f64::NAN
            }
        },
        lo,
        hi,
        1e-15 * (hi - lo),
    );
    if let Some(e) = err {
        return Err(e);
    }
    r.ok_or_else(|| Error::QuadratureFailure(format!("cannot invert the time map at {target}")))
}
