//! Surfaces, metrics, Hamiltonians and the initial fiber circle.
//!
//! Every supported surface is handled in coordinates `(theta, s)` with metric
//! `a(s)^2 dtheta^2 + ds^2`. The flat torus is the special case `a = 1`,
//! `L = 1` with `theta` taken modulo 1 instead of `2 pi`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trig::TrigPoly;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceKind {
    RevolutionTorus,
    RevolutionSphere,
    FlatTorus,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SurfaceModel {
    kind: SurfaceKind,
    profile: TrigPoly,
    length: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HamiltonianKind {
    Geodesic,
    Schrodinger,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HamiltonianModel {
    kind: HamiltonianKind,
    potential: TrigPoly,
    energy: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub theta: f64,
    pub s: f64,
}

impl SurfacePoint {
    pub fn new(theta: f64, s: f64) -> Self {
        Self { theta, s }
    }
}

/// A covector `(p_theta, p_s)` at a surface point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CotangentPoint {
    pub theta: f64,
    pub s: f64,
    pub p_theta: f64,
    pub p_s: f64,
}

impl CotangentPoint {
    pub fn new(theta: f64, s: f64, p_theta: f64, p_s: f64) -> Self {
        Self { theta, s, p_theta, p_s }
    }

    pub fn from_array(y: [f64; 4]) -> Self {
        Self::new(y[0], y[1], y[2], y[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.theta, self.s, self.p_theta, self.p_s]
    }

    pub fn position(&self) -> SurfacePoint {
        SurfacePoint::new(self.theta, self.s)
    }
}

pub(crate) fn rem(x: f64, p: f64) -> f64 {
    let r = x.rem_euclid(p);
    if r >= p {
        0.0
    } else {
        r
    }
}

impl SurfaceModel {
    pub fn flat_torus() -> Self {
        Self { kind: SurfaceKind::FlatTorus, profile: TrigPoly::constant(1.0), length: 1.0 }
    }

    /// Torus of revolution; `profile` must have base frequency `2 pi / length`.
    pub fn revolution_torus(profile: TrigPoly, length: f64) -> Result<Self> {
        check_length(length)?;
        check_freq(&profile, TAU / length, "profile")?;
        let (min, _) = profile.range_on(0.0, length);
        if min <= 0.0 {
            return Err(Error::InvalidInput(format!("profile must be positive; minimum {min}")));
        }
        Ok(Self { kind: SurfaceKind::RevolutionTorus, profile, length })
    }

    /// Sphere of revolution on `[0, length]`; `profile` must be a sine series
    /// in `pi s / length` with `a'(0) = 1` and `a'(L) = -1`.
    pub fn revolution_sphere(profile: TrigPoly, length: f64) -> Result<Self> {
        check_length(length)?;
        check_freq(&profile, PI / length, "profile")?;
        if profile.cos_coeffs().iter().any(|&c| c != 0.0) {
            return Err(Error::InvalidInput(
                "sphere profile must be a pure sine series (smooth at the poles)".into(),
            ));
        }
        let d0 = profile.derivs(0.0)[1];
        let dl = profile.derivs(length)[1];
        if (d0 - 1.0).abs() > 1e-10 || (dl + 1.0).abs() > 1e-10 {
            return Err(Error::InvalidInput(format!(
                "sphere profile needs a'(0)=1 and a'(L)=-1, got {d0} and {dl}"
            )));
        }
        let eps = 1e-6 * length;
        let (min, _) = profile.range_on(eps, length - eps);
        if min <= 0.0 {
            return Err(Error::InvalidInput("sphere profile must be positive in the interior".into()));
        }
        Ok(Self { kind: SurfaceKind::RevolutionSphere, profile, length })
    }

    pub fn kind(&self) -> SurfaceKind {
        self.kind
    }

    pub fn profile(&self) -> &TrigPoly {
        &self.profile
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn is_sphere(&self) -> bool {
        self.kind == SurfaceKind::RevolutionSphere
    }

    /// Period of the angular coordinate.
    pub fn theta_period(&self) -> f64 {
        match self.kind {
            SurfaceKind::FlatTorus => 1.0,
            _ => TAU,
        }
    }

    pub fn pole_tolerance(&self) -> f64 {
        1e-9 * self.length
    }

    pub fn near_pole(&self, s: f64) -> bool {
        self.is_sphere() && (s.abs() <= self.pole_tolerance() || (s - self.length).abs() <= self.pole_tolerance())
    }

    fn check_point(&self, s: f64) -> Result<()> {
        if self.near_pole(s) {
            return Err(Error::PoleEvaluation { s });
        }
        Ok(())
    }

    /// `a, a', a'', a'''` at `s`.
    pub fn a_derivs(&self, s: f64) -> [f64; 4] {
        self.profile.derivs(s)
    }

    pub fn metric_coeffs(&self, x: SurfacePoint) -> Result<(f64, f64, f64)> {
        self.check_point(x.s)?;
        let a = self.profile.eval(x.s);
        Ok((a * a, 0.0, 1.0))
    }

    /// `g`-norm of a tangent vector `(dtheta, ds)` at `s`.
    pub fn tangent_norm(&self, s: f64, dtheta: f64, ds: f64) -> f64 {
        let a = self.profile.eval(s);
        (a * a * dtheta * dtheta + ds * ds).sqrt()
    }

    /// Reduce coordinates to the fundamental domain. On the sphere `s` is
    /// folded back into `[0, L]` through the pole (adding `pi` to `theta`).
    pub fn reduce(&self, x: SurfacePoint) -> SurfacePoint {
        match self.kind {
            SurfaceKind::RevolutionSphere => {
                let l = self.length;
                let u = rem(x.s, 2.0 * l);
                if u <= l {
                    SurfacePoint::new(rem(x.theta, TAU), u)
                } else {
                    SurfacePoint::new(rem(x.theta + PI, TAU), 2.0 * l - u)
                }
            }
            _ => SurfacePoint::new(rem(x.theta, self.theta_period()), rem(x.s, self.length)),
        }
    }

    /// Reduce a cotangent point; on the sphere folding through a pole also
    /// flips `p_s`.
    pub fn reduce_cotangent(&self, p: CotangentPoint) -> CotangentPoint {
        match self.kind {
            SurfaceKind::RevolutionSphere => {
                let l = self.length;
                let u = rem(p.s, 2.0 * l);
                if u <= l {
                    CotangentPoint::new(rem(p.theta, TAU), u, p.p_theta, p.p_s)
                } else {
                    CotangentPoint::new(rem(p.theta + PI, TAU), 2.0 * l - u, p.p_theta, -p.p_s)
                }
            }
            _ => {
                let x = self.reduce(p.position());
                CotangentPoint::new(x.theta, x.s, p.p_theta, p.p_s)
            }
        }
    }
}

/// Axis-aligned rectangle `[theta0, theta1) x [s0, s1)` in surface
/// coordinates; `theta` is taken modulo its period, and `s` modulo `L` on
/// tori.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rect {
    pub theta: [f64; 2],
    pub s: [f64; 2],
}

impl Rect {
    pub fn validate(&self, surface: &SurfaceModel) -> Result<()> {
        let wt = self.theta[1] - self.theta[0];
        let ws = self.s[1] - self.s[0];
        if !(wt > 0.0 && wt <= surface.theta_period() && ws > 0.0 && ws <= surface.length()) {
            return Err(Error::InvalidInput(format!("mask rectangle {self:?} is empty or wider than the surface")));
        }
        if surface.is_sphere() && (self.s[0] < 0.0 || self.s[1] > surface.length()) {
            return Err(Error::InvalidInput("mask s-range must lie in [0, L] on the sphere".into()));
        }
        Ok(())
    }

    pub fn contains(&self, surface: &SurfaceModel, x: SurfacePoint) -> bool {
        let x = surface.reduce(x);
        let in_theta = rem(x.theta - self.theta[0], surface.theta_period()) < self.theta[1] - self.theta[0];
        let in_s = if surface.is_sphere() {
            x.s >= self.s[0] && x.s < self.s[1]
        } else {
            rem(x.s - self.s[0], surface.length()) < self.s[1] - self.s[0]
        };
        in_theta && in_s
    }

    /// Fraction of the `theta`-circle covered.
    pub fn theta_fraction(&self, surface: &SurfaceModel) -> f64 {
        (self.theta[1] - self.theta[0]) / surface.theta_period()
    }

    /// The complement split into rectangles.
    pub fn complement(&self, surface: &SurfaceModel) -> Vec<Rect> {
        let p = surface.theta_period();
        let l = surface.length();
        let mut out = Vec::new();
        let wt = self.theta[1] - self.theta[0];
        if wt < p {
            let s_all = if surface.is_sphere() { [0.0, l] } else { [self.s[0], self.s[0] + l] };
            out.push(Rect { theta: [self.theta[1], self.theta[0] + p], s: s_all });
        }
        if surface.is_sphere() {
            if self.s[0] > 0.0 {
                out.push(Rect { theta: self.theta, s: [0.0, self.s[0]] });
            }
            if self.s[1] < l {
                out.push(Rect { theta: self.theta, s: [self.s[1], l] });
            }
        } else if self.s[1] - self.s[0] < l {
            out.push(Rect { theta: self.theta, s: [self.s[1], self.s[0] + l] });
        }
        out
    }
}

fn check_length(length: f64) -> Result<()> {
    if !(length.is_finite() && length > 0.0) {
        return Err(Error::InvalidInput(format!("length L = {length} must be positive")));
    }
    Ok(())
}

fn check_freq(p: &TrigPoly, expected: f64, what: &str) -> Result<()> {
    if !p.is_constant() && (p.freq() - expected).abs() > 1e-12 * expected {
        return Err(Error::InvalidInput(format!(
            "{what} base frequency {} does not match the surface period (expected {expected})",
            p.freq()
        )));
    }
    Ok(())
}

impl HamiltonianModel {
    pub fn geodesic(energy: f64) -> Result<Self> {
        if !(energy.is_finite() && energy > 0.0) {
            return Err(Error::InvalidInput(format!("geodesic energy E = {energy} must be positive")));
        }
        Ok(Self { kind: HamiltonianKind::Geodesic, potential: TrigPoly::constant(0.0), energy })
    }

    /// `H = g*/2 + V(s)`; `potential` must match the surface's period and on
    /// the sphere be a cosine series (even about both poles).
    pub fn schrodinger(potential: TrigPoly, energy: f64, surface: &SurfaceModel) -> Result<Self> {
        if !energy.is_finite() {
            return Err(Error::InvalidInput("energy must be finite".into()));
        }
        let l = surface.length();
        match surface.kind() {
            SurfaceKind::RevolutionSphere => {
                check_freq(&potential, PI / l, "potential")?;
                if potential.sin_coeffs().iter().any(|&c| c != 0.0) {
                    return Err(Error::InvalidInput("sphere potential must be a pure cosine series".into()));
                }
            }
            _ => check_freq(&potential, TAU / l, "potential")?,
        }
        let (vmin, _) = potential.range_on(0.0, l);
        if vmin >= energy {
            return Err(Error::InvalidInput(format!("allowed region {{V < E}} is empty (min V = {vmin})")));
        }
        // dV must not vanish on {V = E}.
        let n = 256 * (potential.degree() + 1);
        let h = l / n as f64;
        for i in 0..n {
            let (x0, x1) = (i as f64 * h, (i + 1) as f64 * h);
            let (f0, f1) = (potential.eval(x0) - energy, potential.eval(x1) - energy);
            if f0 == 0.0 || f0.signum() != f1.signum() {
                let root = crate::quad::brent(|x| potential.eval(x) - energy, x0, x1, 1e-14).unwrap_or(x0);
                let dv = potential.derivs(root)[1];
                if dv.abs() < 1e-8 {
                    return Err(Error::InvalidInput(format!("dV vanishes on {{V = E}} at s = {root}")));
                }
            }
        }
        Ok(Self { kind: HamiltonianKind::Schrodinger, potential, energy })
    }

    pub fn kind(&self) -> HamiltonianKind {
        self.kind
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn potential(&self) -> &TrigPoly {
        &self.potential
    }

    /// `V, V', V'', V'''` at `s` (zero for the geodesic kind).
    pub fn v_derivs(&self, s: f64) -> [f64; 4] {
        match self.kind {
            HamiltonianKind::Geodesic => [0.0; 4],
            HamiltonianKind::Schrodinger => self.potential.derivs(s),
        }
    }

    pub fn v(&self, s: f64) -> f64 {
        self.v_derivs(s)[0]
    }

    pub fn value(&self, surface: &SurfaceModel, pt: &CotangentPoint) -> Result<f64> {
        surface.check_point(pt.s)?;
        let a = surface.profile().eval(pt.s);
        Ok(0.5 * (pt.p_theta * pt.p_theta / (a * a) + pt.p_s * pt.p_s) + self.v(pt.s))
    }

    pub fn fiber(&self, surface: &SurfaceModel, a_pt: SurfacePoint) -> Result<Fiber> {
        surface.check_point(a_pt.s)?;
        let va = self.v(a_pt.s);
        if va >= self.energy {
            return Err(Error::EmptyFiber { potential: va, energy: self.energy });
        }
        let radius = (2.0 * (self.energy - va)).sqrt();
        let a = surface.profile().eval(a_pt.s);
        if !(a > 0.0) {
            return Err(Error::DegenerateFiber { omega: 0.0 });
        }
        Ok(Fiber { base: a_pt, a, radius })
    }
}

/// Parametrization of `Sigma^A`, the energy circle in the cotangent plane
/// over `A`, by the angle `omega` in the orthonormal coframe `(a dtheta, ds)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Fiber {
    pub base: SurfacePoint,
    /// `a(s_A)`.
    pub a: f64,
    /// `g*`-radius `sqrt(2 (E - V(A)))`.
    pub radius: f64,
}

impl Fiber {
    pub fn point(&self, omega: f64) -> CotangentPoint {
        let (sn, cs) = omega.sin_cos();
        CotangentPoint::new(self.base.theta, self.base.s, self.a * self.radius * cs, self.radius * sn)
    }

    /// `d/domega` of [`Fiber::point`]; the spatial part vanishes.
    pub fn tangent(&self, omega: f64) -> [f64; 4] {
        let (sn, cs) = omega.sin_cos();
        [0.0, 0.0, -self.a * self.radius * sn, self.radius * cs]
    }

    /// Largest Clairaut value reached on the fiber, `a(s_A) r`.
    pub fn clairaut_max(&self) -> f64 {
        self.a * self.radius
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn torus() -> SurfaceModel {
        SurfaceModel::revolution_torus(TrigPoly::new(vec![2.0, 1.0], vec![], 1.0).unwrap(), TAU).unwrap()
    }

    fn round_sphere() -> SurfaceModel {
        SurfaceModel::revolution_sphere(TrigPoly::new(vec![], vec![0.0, 1.0], 1.0).unwrap(), PI).unwrap()
    }

    #[test]
    fn metric_examples() {
        let flat = SurfaceModel::flat_torus();
        assert_eq!(flat.metric_coeffs(SurfacePoint::new(0.3, 0.7)).unwrap(), (1.0, 0.0, 1.0));
        assert_eq!(torus().metric_coeffs(SurfacePoint::new(1.0, 0.0)).unwrap(), (9.0, 0.0, 1.0));
        let (g11, _, _) = round_sphere().metric_coeffs(SurfacePoint::new(0.0, PI / 2.0)).unwrap();
        assert!((g11 - 1.0).abs() < 1e-15);
        assert!(matches!(
            round_sphere().metric_coeffs(SurfacePoint::new(0.0, 1e-12)),
            Err(Error::PoleEvaluation { .. })
        ));
    }

    #[test]
    fn hamiltonian_examples() {
        let h = HamiltonianModel::geodesic(0.5).unwrap();
        let flat = SurfaceModel::flat_torus();
        assert_eq!(h.value(&flat, &CotangentPoint::new(0.0, 0.0, 1.0, 0.0)).unwrap(), 0.5);
        assert_eq!(h.value(&torus(), &CotangentPoint::new(0.0, 0.0, 3.0, 0.0)).unwrap(), 0.5);
        let tor = torus();
        let v = TrigPoly::new(vec![0.0, 1.0], vec![], 1.0).unwrap();
        let hs = HamiltonianModel::schrodinger(v, 2.0, &tor).unwrap();
        assert_eq!(hs.value(&tor, &CotangentPoint::new(0.0, 0.0, 0.0, 0.0)).unwrap(), 1.0);
    }

    #[test]
    fn fiber_lies_on_energy_level() {
        let tor = torus();
        let h = HamiltonianModel::geodesic(0.5).unwrap();
        let f = h.fiber(&tor, SurfacePoint::new(0.2, 0.0)).unwrap();
        let p = f.point(0.0);
        assert_eq!((p.p_theta, p.p_s), (3.0, 0.0));
        for i in 0..64 {
            let w = i as f64 * TAU / 64.0;
            let e = h.value(&tor, &f.point(w)).unwrap();
            assert!((e - 0.5).abs() < 1e-12 * 0.5);
        }
        // schrodinger on the flat torus: radius sqrt(2 (E - V(A)))
        let flat = SurfaceModel::flat_torus();
        let v = TrigPoly::new(vec![0.3, 0.0], vec![], TAU).unwrap();
        let hs = HamiltonianModel::schrodinger(v, 0.5, &flat).unwrap();
        let fs = hs.fiber(&flat, SurfacePoint::new(0.0, 0.0)).unwrap();
        assert!((fs.radius - 0.4f64.sqrt()).abs() < 1e-15);
        let empty = HamiltonianModel::schrodinger(TrigPoly::new(vec![0.0, 1.0], vec![], TAU).unwrap(), 0.5, &flat)
            .unwrap()
            .fiber(&flat, SurfacePoint::new(0.0, 0.0));
        assert!(matches!(empty, Err(Error::EmptyFiber { .. })));
    }

    #[test]
    fn fiber_tangent_matches_difference_quotient() {
        let h = HamiltonianModel::geodesic(0.7).unwrap();
        let f = h.fiber(&torus(), SurfacePoint::new(0.0, 1.1)).unwrap();
        let w = 0.9;
        let d = 1e-6;
        let (p, m) = (f.point(w + d).to_array(), f.point(w - d).to_array());
        let t = f.tangent(w);
        for i in 0..4 {
            assert!(((p[i] - m[i]) / (2.0 * d) - t[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn validation_rejects_bad_surfaces() {
        let neg = TrigPoly::new(vec![0.5, 1.0], vec![], 1.0).unwrap();
        assert!(SurfaceModel::revolution_torus(neg, TAU).is_err());
        let wrong_slope = TrigPoly::new(vec![], vec![0.0, 2.0], 1.0).unwrap();
        assert!(SurfaceModel::revolution_sphere(wrong_slope, PI).is_err());
        assert!(HamiltonianModel::geodesic(0.0).is_err());
    }

    #[test]
    fn sphere_reduction_folds_through_pole() {
        let sp = round_sphere();
        let p = sp.reduce_cotangent(CotangentPoint::new(0.5, PI + 0.2, 0.0, 1.0));
        assert!((p.s - (PI - 0.2)).abs() < 1e-14);
        assert!((p.theta - (0.5 + PI)).abs() < 1e-14);
        assert_eq!(p.p_s, -1.0);
    }
}
