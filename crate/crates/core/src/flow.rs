//! Hamiltonian vector field, its linearization, and trajectory integration.
//!
//! On spheres of revolution the `(theta, s)` chart is singular at the poles.
//! Trajectories that come within `0.05 L` of a pole are continued in
//! Cartesian coordinates `(x, y) = r (cos theta, sin theta)` centred on that
//! pole, where the Hamiltonian is smooth, and mapped back once `r > 0.1 L`.

use num_dual::{DualNum, HyperDual64};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CotangentPoint, HamiltonianModel, SurfaceModel};
use crate::ode::{self, OdeConfig};
use crate::trig::TrigPoly;

const POLE_ENTER: f64 = 0.05;
const POLE_LEAVE: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub point: CotangentPoint,
    pub tangent: Option<[f64; 4]>,
}

impl PhaseState {
    pub fn new(point: CotangentPoint, tangent: Option<[f64; 4]>) -> Self {
        Self { point, tangent }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { rel_tol: 1e-10, abs_tol: 1e-12, max_step: 1.0 }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0 && self.max_step > 0.0) {
            return Err(Error::InvalidInput("integrator tolerances and max_step must be positive".into()));
        }
        Ok(())
    }

    pub fn ode(&self) -> OdeConfig {
        OdeConfig { rel_tol: self.rel_tol, abs_tol: self.abs_tol, max_step: self.max_step, ..OdeConfig::default() }
    }
}

fn polar_field(surface: &SurfaceModel, h: &HamiltonianModel, y: &[f64; 8], with_tangent: bool) -> Result<[f64; 8]> {
    let s = y[1];
    if surface.near_pole(s) {
        return Err(Error::PoleEvaluation { s });
    }
    let [a, a1, a2, _] = surface.a_derivs(s);
    let [_, v1, v2, _] = h.v_derivs(s);
    let (pt, ps) = (y[2], y[3]);
    let ia2 = 1.0 / (a * a);
    let ia3 = ia2 / a;
    let mut out = [0.0; 8];
    out[0] = pt * ia2;
    out[1] = ps;
    out[3] = pt * pt * a1 * ia3 - v1;
    if with_tangent {
        let (ds, dpt, dps) = (y[5], y[6], y[7]);
        out[4] = -2.0 * pt * a1 * ia3 * ds + ia2 * dpt;
        out[5] = dps;
        out[7] = (pt * pt * (a2 * ia3 - 3.0 * a1 * a1 * ia3 / a) - v2) * ds + 2.0 * pt * a1 * ia3 * dpt;
    }
    Ok(out)
}

/// Hamilton's equations at `pt`.
pub fn vector_field(h: &HamiltonianModel, surface: &SurfaceModel, pt: &CotangentPoint) -> Result<[f64; 4]> {
    let mut y = [0.0; 8];
    y[..4].copy_from_slice(&pt.to_array());
    let f = polar_field(surface, h, &y, false)?;
    Ok([f[0], f[1], f[2], f[3]])
}

/// Jacobian of [`vector_field`] applied to the state's tangent.
pub fn variational_field(h: &HamiltonianModel, surface: &SurfaceModel, state: &PhaseState) -> Result<[f64; 4]> {
    let tan = state.tangent.ok_or(Error::MissingTangent)?;
    let mut y = [0.0; 8];
    y[..4].copy_from_slice(&state.point.to_array());
    y[4..].copy_from_slice(&tan);
    let f = polar_field(surface, h, &y, true)?;
    Ok([f[4], f[5], f[6], f[7]])
}

// ---------------------------------------------------------------------------
// Pole chart

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Pole {
    North,
    South,
}

/// Profile and potential written about one pole as functions of the radial
/// distance `r`: `a(r) = sum sin_k sin(k w r)`, `V(r) = sum cos_k cos(k w r)`.
struct PoleChart {
    pole: Pole,
    sin: Vec<f64>,
    cos: Vec<f64>,
    freq: f64,
}

fn series<D: DualNum<Primitive = f64> + Copy>(u: D, coeffs: &[f64]) -> D {
    let mut acc = D::from(0.0);
    for &c in coeffs.iter().rev() {
        acc = acc * u + c;
    }
    acc
}

const SINC: [f64; 7] = [1.0, -1.0 / 6.0, 1.0 / 120.0, -1.0 / 5040.0, 1.0 / 362880.0, -1.0 / 39916800.0, 1.0 / 6227020800.0];
const GSER: [f64; 7] = [
    1.0 / 6.0,
    -1.0 / 120.0,
    1.0 / 5040.0,
    -1.0 / 362880.0,
    1.0 / 39916800.0,
    -1.0 / 6227020800.0,
    1.0 / 1307674368000.0,
];
const COSS: [f64; 8] = [
    1.0,
    -0.5,
    1.0 / 24.0,
    -1.0 / 720.0,
    1.0 / 40320.0,
    -1.0 / 3628800.0,
    1.0 / 479001600.0,
    -1.0 / 87178291200.0,
];

/// `sin z / z` as a function of `u = z^2`.
fn sinc_sq<D: DualNum<Primitive = f64> + Copy>(u: D) -> D {
    if u.re() < 0.25 {
        series(u, &SINC)
    } else {
        let z = u.sqrt();
        z.sin() / z
    }
}

/// `(1 - sin z / z) / z^2` as a function of `u = z^2`.
fn g_sq<D: DualNum<Primitive = f64> + Copy>(u: D) -> D {
    if u.re() < 0.25 {
        series(u, &GSER)
    } else {
        let z = u.sqrt();
        (D::from(1.0) - z.sin() / z) / u
    }
}

fn cos_sq<D: DualNum<Primitive = f64> + Copy>(u: D) -> D {
    if u.re() < 0.25 {
        series(u, &COSS)
    } else {
        u.sqrt().cos()
    }
}

impl PoleChart {
    fn new(surface: &SurfaceModel, h: &HamiltonianModel, pole: Pole) -> Self {
        let l = surface.length();
        let (a, v): (TrigPoly, TrigPoly) = match pole {
            Pole::North => (surface.profile().clone(), h.potential().clone()),
            Pole::South => (surface.profile().reflected(l), h.potential().reflected(l)),
        };
        let n = a.sin_coeffs().len().max(v.cos_coeffs().len());
        let mut sin = a.sin_coeffs().to_vec();
        let mut cos = v.cos_coeffs().to_vec();
        sin.resize(n, 0.0);
        cos.resize(n, 0.0);
        Self { pole, sin, cos, freq: a.freq() }
    }

    fn hamiltonian<D: DualNum<Primitive = f64> + Copy>(&self, z: [D; 4]) -> D {
        let [x, y, px, py] = z;
        let rho = x * x + y * y;
        let mut alpha = D::from(0.0);
        let mut tail = D::from(0.0);
        let mut pot = D::from(self.cos[0]);
        for k in 1..self.sin.len() {
            let w = k as f64 * self.freq;
            let u = rho * (w * w);
            if self.sin[k] != 0.0 {
                alpha += sinc_sq(u) * (self.sin[k] * w);
                tail += g_sq(u) * (self.sin[k] * w * w * w);
            }
            if self.cos[k] != 0.0 {
                pot += cos_sq(u) * self.cos[k];
            }
        }
        // 1/a^2 - 1/r^2 = (1 + alpha)(1 - alpha) / (r alpha)^2, and
        // (1 - alpha) / r^2 = tail because sum sin_k k w = a'(0) = 1.
        let f = (D::from(1.0) + alpha) * tail / (alpha * alpha);
        let j = x * py - y * px;
        (px * px + py * py) * 0.5 + j * j * f * 0.5 + pot
    }

    /// Gradient of `H` and Hessian applied to `dir`.
    fn grad_hess(&self, z: &[f64; 4], dir: Option<&[f64; 4]>) -> ([f64; 4], [f64; 4]) {
        let mut grad = [0.0; 4];
        let mut hv = [0.0; 4];
        for i in 0..4 {
            let zz: [HyperDual64; 4] = std::array::from_fn(|j| {
                HyperDual64::new(
                    z[j],
                    if i == j { 1.0 } else { 0.0 },
                    dir.map_or(0.0, |d| d[j]),
                    0.0,
                )
            });
            let hval = self.hamiltonian(zz);
            grad[i] = hval.eps1;
            hv[i] = hval.eps1eps2;
        }
        (grad, hv)
    }

    fn field(&self, y: &[f64; 8], with_tangent: bool) -> [f64; 8] {
        let z = [y[0], y[1], y[2], y[3]];
        let d = [y[4], y[5], y[6], y[7]];
        let (g, hv) = self.grad_hess(&z, if with_tangent { Some(&d) } else { None });
        let mut out = [g[2], g[3], -g[0], -g[1], 0.0, 0.0, 0.0, 0.0];
        if with_tangent {
            out[4] = hv[2];
            out[5] = hv[3];
            out[6] = -hv[0];
            out[7] = -hv[1];
        }
        out
    }

    /// Radial chart coordinates `(theta, r, p_theta, p_r)` from the global
    /// polar state, including tangent.
    fn from_global(&self, surface: &SurfaceModel, y: &[f64; 8]) -> [f64; 8] {
        match self.pole {
            Pole::North => *y,
            Pole::South => [y[0], surface.length() - y[1], y[2], -y[3], y[4], -y[5], y[6], -y[7]],
        }
    }

    fn to_global(&self, surface: &SurfaceModel, y: &[f64; 8]) -> [f64; 8] {
        // The map is an involution.
        self.from_global(surface, y)
    }
}

/// `(theta, r, p_theta, p_r)` with tangent to Cartesian `(x, y, p_x, p_y)`.
fn polar_to_cart(y: &[f64; 8]) -> [f64; 8] {
    let [th, r, pt, pr, dth, dr, dpt, dpr] = *y;
    let (sn, cs) = th.sin_cos();
    let x = r * cs;
    let yy = r * sn;
    let px = pr * cs - pt * sn / r;
    let py = pr * sn + pt * cs / r;
    let dx = cs * dr - r * sn * dth;
    let dy = sn * dr + r * cs * dth;
    let dpx = cs * dpr - pr * sn * dth - sn / r * dpt - pt * cs / r * dth + pt * sn / (r * r) * dr;
    let dpy = sn * dpr + pr * cs * dth + cs / r * dpt - pt * sn / r * dth - pt * cs / (r * r) * dr;
    [x, yy, px, py, dx, dy, dpx, dpy]
}

/// Inverse of [`polar_to_cart`]; `theta_ref` selects the branch of the angle.
fn cart_to_polar(z: &[f64; 8], theta_ref: f64) -> [f64; 8] {
    let [x, y, px, py, dx, dy, dpx, dpy] = *z;
    let r = x.hypot(y);
    if r == 0.0 {
        // Exactly on the pole: keep the radial parts and put the transverse
        // tangent at the smallest radius that still carries it.
        let (sn, cs) = theta_ref.sin_cos();
        let r = 1e-200;
        let perp = -sn * dx + cs * dy;
        return [theta_ref, r, 0.0, cs * px + sn * py, perp / r, cs * dx + sn * dy, 0.0, cs * dpx + sn * dpy];
    }
    let base = y.atan2(x);
    let th = base + std::f64::consts::TAU * ((theta_ref - base) / std::f64::consts::TAU).round();
    let pt = x * py - y * px;
    let pr = (x * px + y * py) / r;
    let dr = (x * dx + y * dy) / r;
    let dth = (x * dy - y * dx) / (r * r);
    let dpt = dx * py + x * dpy - dy * px - y * dpx;
    let dpr = (dx * px + x * dpx + dy * py + y * dpy) / r - (x * px + y * py) * dr / (r * r);
    [th, r, pt, pr, dth, dr, dpt, dpr]
}

// ---------------------------------------------------------------------------
// Integration

/// Integrate from `t0` to `t1`. Returns the final state and a step-size hint
/// that can seed the next call.
pub fn advance_with_hint(
    h: &HamiltonianModel,
    surface: &SurfaceModel,
    state: &PhaseState,
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
    h_hint: Option<f64>,
) -> Result<(PhaseState, f64)> {
    if t1 < t0 {
        return Err(Error::InvalidInput(format!("advance needs t1 >= t0 (got {t0} -> {t1})")));
    }
    let with_tangent = state.tangent.is_some();
    let mut y = [0.0; 8];
    y[..4].copy_from_slice(&state.point.to_array());
    if let Some(tan) = state.tangent {
        y[4..].copy_from_slice(&tan);
    }
    let ode_cfg = cfg.ode();
    let mut t = t0;
    let mut hint = h_hint;
    if !surface.is_sphere() {
        let out = ode::integrate(
            |z: &[f64; 8]| polar_field(surface, h, z, with_tangent),
            y,
            t0,
            t1,
            hint,
            &ode_cfg,
            |_, _| false,
        )?;
        return Ok((finish(&out.y, with_tangent), out.h));
    }
    let l = surface.length();
    let north = PoleChart::new(surface, h, Pole::North);
    let south = PoleChart::new(surface, h, Pole::South);
    if y[1] <= 0.0 || y[1] >= l {
        return Err(Error::PoleEvaluation { s: y[1] });
    }
    while t < t1 {
        let dist = y[1].min(l - y[1]);
        if dist < POLE_ENTER * l {
            let chart = if y[1] < 0.5 * l { &north } else { &south };
            let local = chart.from_global(surface, &y);
            let theta_ref = local[0];
            let z0 = polar_to_cart(&local);
            let leave = POLE_LEAVE * l;
            let out = ode::integrate(
                |z: &[f64; 8]| Ok(chart.field(z, with_tangent)),
                z0,
                t,
                t1,
                hint,
                &ode_cfg,
                |_, z| z[0].hypot(z[1]) > leave,
            )?;
            let r = out.y[0].hypot(out.y[1]);
            if !r.is_finite() {
                return Err(Error::PoleCrossing { t: out.t });
            }
            let local = cart_to_polar(&out.y, theta_ref);
            y = chart.to_global(surface, &local);
            t = out.t;
            hint = Some(out.h);
        } else {
            let enter = POLE_ENTER * l;
            let out = ode::integrate(
                |z: &[f64; 8]| polar_field(surface, h, z, with_tangent),
                y,
                t,
                t1,
                hint,
                &ode_cfg,
                |_, z| z[1].min(l - z[1]) < enter,
            )?;
            y = out.y;
            t = out.t;
            hint = Some(out.h);
        }
    }
    Ok((finish(&y, with_tangent), hint.unwrap_or(0.0)))
}

/// Start on the fiber over a sphere pole: the covector `r (cos omega,
/// sin omega)` in the pole's Cartesian chart, with tangent `d/d omega`, is
/// integrated to `t1 > 0`. Returns the global state and a step-size hint.
pub fn advance_from_pole(
    h: &HamiltonianModel,
    surface: &SurfaceModel,
    north: bool,
    omega: f64,
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<(PhaseState, f64)> {
    if !surface.is_sphere() {
        return Err(Error::InvalidInput("pole start needs a sphere of revolution".into()));
    }
    if !(t1 > 0.0) {
        return Err(Error::InvalidInput(format!("pole start needs t1 > 0 (got {t1})")));
    }
    let l = surface.length();
    let s_pole = if north { 0.0 } else { l };
    let r = 2.0 * (h.energy() - h.v(s_pole));
    if !(r > 0.0) {
        return Err(Error::EmptyFiber { potential: h.v(s_pole), energy: h.energy() });
    }
    let r = r.sqrt();
    let chart = PoleChart::new(surface, h, if north { Pole::North } else { Pole::South });
    let (sn, cs) = omega.sin_cos();
    let z0 = [0.0, 0.0, r * cs, r * sn, 0.0, 0.0, -r * sn, r * cs];
    let leave = POLE_LEAVE * l;
    let out = ode::integrate(
        |z: &[f64; 8]| Ok(chart.field(z, true)),
        z0,
        0.0,
        t1,
        None,
        &cfg.ode(),
        |_, z| z[0].hypot(z[1]) > leave,
    )?;
    let local = cart_to_polar(&out.y, omega);
    let y = chart.to_global(surface, &local);
    let state = finish(&y, true);
    if out.t >= t1 {
        return Ok((state, out.h));
    }
    advance_with_hint(h, surface, &state, out.t, t1, cfg, Some(out.h))
}

fn finish(y: &[f64; 8], with_tangent: bool) -> PhaseState {
    let point = CotangentPoint::new(y[0], y[1], y[2], y[3]);
    let tangent = with_tangent.then(|| [y[4], y[5], y[6], y[7]]);
    PhaseState { point, tangent }
}

/// Integrate the state (and its tangent, if present) from `t0` to `t1`.
/// Coordinates are not reduced; use [`SurfaceModel::reduce_cotangent`].
pub fn advance(
    h: &HamiltonianModel,
    surface: &SurfaceModel,
    state: &PhaseState,
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<PhaseState> {
    advance_with_hint(h, surface, state, t0, t1, cfg, None).map(|(s, _)| s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    fn torus() -> SurfaceModel {
        SurfaceModel::revolution_torus(TrigPoly::new(vec![2.0, 1.0], vec![], 1.0).unwrap(), TAU).unwrap()
    }

    fn bumpy_sphere() -> SurfaceModel {
        // sin s (1 + 0.3 sin^2 s)
        let p = TrigPoly::new(vec![], vec![0.0, 1.0 + 0.225, 0.0, -0.075], 1.0).unwrap();
        SurfaceModel::revolution_sphere(p, PI).unwrap()
    }

    #[test]
    fn field_examples() {
        let h = HamiltonianModel::geodesic(0.5).unwrap();
        let flat = SurfaceModel::flat_torus();
        assert_eq!(vector_field(&h, &flat, &CotangentPoint::new(0.0, 0.0, 1.0, 0.0)).unwrap(), [1.0, 0.0, 0.0, 0.0]);
        let f = vector_field(&h, &torus(), &CotangentPoint::new(0.0, 0.0, 3.0, 0.0)).unwrap();
        assert!((f[0] - 1.0 / 3.0).abs() < 1e-15 && f[1] == 0.0 && f[3].abs() < 1e-15);
        let f = vector_field(&h, &torus(), &CotangentPoint::new(0.0, PI / 2.0, 1.0, 0.0)).unwrap();
        // independent: -dH/ds by central differences
        let hs = |s: f64| h.value(&torus(), &CotangentPoint::new(0.0, s, 1.0, 0.0)).unwrap();
        let d = 1e-6;
        let fd = -(hs(PI / 2.0 + d) - hs(PI / 2.0 - d)) / (2.0 * d);
        assert!((f[3] - fd).abs() < 1e-8);
        assert!((f[3] + 0.125).abs() < 1e-12);
    }

    #[test]
    fn field_is_tangent_to_energy_levels() {
        let tor = torus();
        let v = TrigPoly::new(vec![0.0, 0.2], vec![0.0, 0.1], 1.0).unwrap();
        let h = HamiltonianModel::schrodinger(v, 1.0, &tor).unwrap();
        let p = CotangentPoint::new(0.3, 1.1, 0.7, -0.4);
        let f = vector_field(&h, &tor, &p).unwrap();
        let d = 1e-6;
        let grad: Vec<f64> = (0..4)
            .map(|i| {
                let mut a = p.to_array();
                let mut b = p.to_array();
                a[i] += d;
                b[i] -= d;
                (h.value(&tor, &CotangentPoint::from_array(a)).unwrap()
                    - h.value(&tor, &CotangentPoint::from_array(b)).unwrap())
                    / (2.0 * d)
            })
            .collect();
        let dh: f64 = (0..4).map(|i| grad[i] * f[i]).sum();
        assert!(dh.abs() < 1e-8);
    }

    #[test]
    fn variational_field_matches_difference_quotient() {
        let tor = torus();
        let h = HamiltonianModel::geodesic(0.5).unwrap();
        let p = CotangentPoint::new(0.1, 2.3, 1.3, 0.2);
        let tan = [0.3, -0.7, 0.4, 1.1];
        let v = variational_field(&h, &tor, &PhaseState::new(p, Some(tan))).unwrap();
        let d = 1e-6;
        let shift = |sg: f64| {
            let a = p.to_array();
            CotangentPoint::from_array(std::array::from_fn(|i| a[i] + sg * d * tan[i]))
        };
        let fp = vector_field(&h, &tor, &shift(1.0)).unwrap();
        let fm = vector_field(&h, &tor, &shift(-1.0)).unwrap();
        for i in 0..4 {
            let fd = (fp[i] - fm[i]) / (2.0 * d);
            assert!((v[i] - fd).abs() <= 1e-6 * (1.0 + fd.abs()), "{i}: {} vs {fd}", v[i]);
        }
        assert!(matches!(
            variational_field(&h, &tor, &PhaseState::new(p, None)),
            Err(Error::MissingTangent)
        ));
        let zero = variational_field(&h, &tor, &PhaseState::new(p, Some([0.0; 4]))).unwrap();
        assert_eq!(zero, [0.0; 4]);
    }

    #[test]
    fn pole_chart_hamiltonian_matches_polar_form() {
        let sp = bumpy_sphere();
        let v = TrigPoly::new(vec![0.1, 0.0, 0.05], vec![], 1.0).unwrap();
        let h = HamiltonianModel::schrodinger(v, 1.0, &sp).unwrap();
        for pole in [Pole::North, Pole::South] {
            let chart = PoleChart::new(&sp, &h, pole);
            for &(th, r, pt, pr) in &[(0.3, 0.01, 0.002, 0.7), (2.0, 0.2, 0.05, -0.3), (-1.0, 0.6, 0.3, 0.1)] {
                let s = if pole == Pole::North { r } else { PI - r };
                let ps = if pole == Pole::North { pr } else { -pr };
                let polar = h.value(&sp, &CotangentPoint::new(th, s, pt, ps)).unwrap();
                let c = polar_to_cart(&[th, r, pt, pr, 0.0, 0.0, 0.0, 0.0]);
                let cart = chart.hamiltonian([c[0], c[1], c[2], c[3]]);
                assert!((polar - cart).abs() < 1e-12, "{pole:?} r={r}: {polar} vs {cart}");
            }
        }
    }

    #[test]
    fn chart_maps_are_inverse_with_consistent_tangents() {
        let y = [0.7, 0.13, 0.02, -0.4, 0.3, -0.2, 0.5, 0.9];
        let z = polar_to_cart(&y);
        let back = cart_to_polar(&z, 0.7);
        for i in 0..8 {
            assert!((back[i] - y[i]).abs() < 1e-12, "{i}");
        }
        // tangent part equals the directional derivative of the point map
        let d = 1e-7;
        let shifted = |sg: f64| {
            let mut w = y;
            for i in 0..4 {
                w[i] += sg * d * y[4 + i];
            }
            polar_to_cart(&w)
        };
        let (p, m) = (shifted(1.0), shifted(-1.0));
        for i in 0..4 {
            let fd = (p[i] - m[i]) / (2.0 * d);
            assert!((z[4 + i] - fd).abs() < 1e-6, "{i}: {} vs {fd}", z[4 + i]);
        }
    }

    #[test]
    fn flat_torus_straight_line() {
        let h = HamiltonianModel::geodesic(0.5).unwrap();
        let flat = SurfaceModel::flat_torus();
        let st = PhaseState::new(CotangentPoint::new(0.0, 0.0, 1.0, 0.0), Some([0.0, 0.0, 0.0, 1.0]));
        let out = advance(&h, &flat, &st, 0.0, 2.5, &IntegratorConfig::default()).unwrap();
        let red = flat.reduce_cotangent(out.point);
        assert!((red.theta - 0.5).abs() < 1e-12 && red.s.abs() < 1e-12);
        let tan = out.tangent.unwrap();
        assert!((tan[1] - 2.5).abs() < 1e-12 && tan[0].abs() < 1e-12);
    }

    #[test]
    fn great_circle_through_poles_closes() {
        let h = HamiltonianModel::geodesic(0.5).unwrap();
        let sp = SurfaceModel::revolution_sphere(TrigPoly::new(vec![], vec![0.0, 1.0], 1.0).unwrap(), PI).unwrap();
        // meridian-ish launch from the equator (tiny p_theta keeps the chart regular)
        let st = PhaseState::new(CotangentPoint::new(0.0, PI / 2.0, 1e-3, (1.0 - 1e-6f64).sqrt()), None);
        let out = advance(&h, &sp, &st, 0.0, TAU, &IntegratorConfig::default()).unwrap();
        let red = sp.reduce_cotangent(out.point);
        assert!((red.s - PI / 2.0).abs() < 1e-7, "{}", red.s);
        let dth = (red.theta - 0.0 + PI).rem_euclid(TAU) - PI;
        assert!(dth.abs() < 1e-6, "{dth}");
    }

    #[test]
    fn sphere_tangent_survives_pole_passage() {
        let h = HamiltonianModel::geodesic(0.5).unwrap();
        let sp = bumpy_sphere();
        let fiber = h.fiber(&sp, crate::geometry::SurfacePoint::new(0.0, 1.0)).unwrap();
        let w = 1.5;
        let cfg = IntegratorConfig::default();
        let run = |om: f64| {
            advance(&h, &sp, &PhaseState::new(fiber.point(om), Some(fiber.tangent(om))), 0.0, 7.0, &cfg).unwrap()
        };
        let c = run(w);
        let d = 1e-5;
        let (p, m) = (run(w + d), run(w - d));
        let tan = c.tangent.unwrap();
        // compare g-lengths of the spatial part (angle branch independent)
        let a = sp.profile().eval(c.point.s);
        let fd_s = (p.point.s - m.point.s) / (2.0 * d);
        let mut fd_th = (p.point.theta - m.point.theta) / (2.0 * d);
        if fd_th.abs() > 1e3 {
            fd_th = ((p.point.theta - m.point.theta + PI).rem_euclid(TAU) - PI) / (2.0 * d);
        }
        assert!((fd_s - tan[1]).abs() < 1e-4 * (1.0 + tan[1].abs()), "{fd_s} {}", tan[1]);
        assert!((a * (fd_th - tan[0])).abs() < 1e-4 * (1.0 + (a * tan[0]).abs()));
        let e = h.value(&sp, &c.point).unwrap();
        assert!((e - 0.5).abs() < 1e-9);
    }

    #[test]
    fn time_reversal_returns_to_start() {
        let h = HamiltonianModel::geodesic(0.5).unwrap();
        let tor = torus();
        let p0 = CotangentPoint::new(0.4, 1.0, 1.2, 0.6);
        let p0 = CotangentPoint { p_s: (1.0 - (1.2f64 / tor.profile().eval(1.0)).powi(2)).sqrt(), ..p0 };
        let cfg = IntegratorConfig::default();
        let fwd = advance(&h, &tor, &PhaseState::new(p0, None), 0.0, 50.0, &cfg).unwrap();
        let flipped = CotangentPoint { p_theta: -fwd.point.p_theta, p_s: -fwd.point.p_s, ..fwd.point };
        let back = advance(&h, &tor, &PhaseState::new(flipped, None), 0.0, 50.0, &cfg).unwrap();
        assert!((back.point.theta - p0.theta).abs() < 1e-6);
        assert!((back.point.s - p0.s).abs() < 1e-6);
        assert!((back.point.p_s + p0.p_s).abs() < 1e-6);
    }
}
