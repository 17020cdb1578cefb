//! Finite trigonometric polynomials.
//!
//! Profiles `a(s)` and potentials `V(s)` are stored as
//! `c_0 + sum_k (c_k cos(k w s) + s_k sin(k w s))` so that every derivative is
//! exact and differences `P(s + d) - P(s)` can be formed without cancellation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigPoly {
    cos: Vec<f64>,
    sin: Vec<f64>,
    freq: f64,
}

impl TrigPoly {
    /// `cos[k]` and `sin[k]` multiply `cos(k freq s)` and `sin(k freq s)`;
    /// `sin[0]` must be zero.
    pub fn new(cos: Vec<f64>, sin: Vec<f64>, freq: f64) -> Result<Self> {
        if !(freq.is_finite() && freq > 0.0) {
            return Err(Error::InvalidInput(format!("base frequency {freq} must be positive")));
        }
        if cos.iter().chain(sin.iter()).any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("non-finite trigonometric coefficient".into()));
        }
        if sin.first().is_some_and(|&c| c != 0.0) {
            return Err(Error::InvalidInput("sin[0] must be zero".into()));
        }
        let n = cos.len().max(sin.len()).max(1);
        let mut cos = cos;
        let mut sin = sin;
        cos.resize(n, 0.0);
        sin.resize(n, 0.0);
        Ok(Self { cos, sin, freq })
    }

    pub fn constant(c: f64) -> Self {
        Self { cos: vec![c], sin: vec![0.0], freq: 1.0 }
    }

    pub fn freq(&self) -> f64 {
        self.freq
    }

    pub fn cos_coeffs(&self) -> &[f64] {
        &self.cos
    }

    pub fn sin_coeffs(&self) -> &[f64] {
        &self.sin
    }

    /// Highest harmonic with a nonzero coefficient.
    pub fn degree(&self) -> usize {
        (0..self.cos.len())
            .rev()
            .find(|&k| self.cos[k] != 0.0 || self.sin[k] != 0.0)
            .unwrap_or(0)
    }

    pub fn is_constant(&self) -> bool {
        self.degree() == 0
    }

    pub fn eval(&self, s: f64) -> f64 {
        let mut acc = self.cos[0];
        for k in 1..self.cos.len() {
            let (sn, cs) = (k as f64 * self.freq * s).sin_cos();
            acc += self.cos[k] * cs + self.sin[k] * sn;
        }
        acc
    }

    /// Value and first three derivatives.
    pub fn derivs(&self, s: f64) -> [f64; 4] {
        let mut out = [self.cos[0], 0.0, 0.0, 0.0];
        for k in 1..self.cos.len() {
            let (c, sn) = (self.cos[k], self.sin[k]);
            if c == 0.0 && sn == 0.0 {
                continue;
            }
            let w = k as f64 * self.freq;
            let (sv, cv) = (w * s).sin_cos();
            let base = c * cv + sn * sv;
            let d1 = w * (-c * sv + sn * cv);
            out[0] += base;
            out[1] += d1;
            out[2] -= w * w * base;
            out[3] -= w * w * d1;
        }
        out
    }

    /// `P(s + d) - P(s)` evaluated through product formulas, accurate to
    /// relative rounding even when `d` is tiny.
    pub fn diff(&self, s: f64, d: f64) -> f64 {
        let mut acc = 0.0;
        for k in 1..self.cos.len() {
            let (c, sn) = (self.cos[k], self.sin[k]);
            if c == 0.0 && sn == 0.0 {
                continue;
            }
            let w = k as f64 * self.freq;
            let half = (0.5 * w * d).sin();
            let (sm, cm) = (w * (s + 0.5 * d)).sin_cos();
            acc += 2.0 * half * (-c * sm + sn * cm);
        }
        acc
    }

    /// `P(shift - r)` as a trigonometric polynomial in `r`.
    pub fn reflected(&self, shift: f64) -> Self {
        let mut cos = self.cos.clone();
        let mut sin = self.sin.clone();
        for k in 1..self.cos.len() {
            let (sl, cl) = (k as f64 * self.freq * shift).sin_cos();
            let (c, s) = (self.cos[k], self.sin[k]);
            cos[k] = c * cl + s * sl;
            sin[k] = c * sl - s * cl;
        }
        Self { cos, sin, freq: self.freq }
    }

    /// Minimum and maximum over `[lo, hi]` sampled on a grid fine enough to
    /// resolve the highest harmonic.
    pub fn range_on(&self, lo: f64, hi: f64) -> (f64, f64) {
        let n = 64 * (self.degree() + 1);
        let h = (hi - lo) / n as f64;
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for i in 0..=n {
            let v = self.eval(lo + i as f64 * h);
            min = min.min(v);
            max = max.max(v);
        }
        (min, max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> TrigPoly {
        TrigPoly::new(vec![2.0, 1.0, -0.3], vec![0.0, 0.4, 0.25], 1.0).unwrap()
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let p = sample();
        let s = 0.7;
        let h = 1e-4;
        let d = p.derivs(s);
        let d1 = (p.eval(s + h) - p.eval(s - h)) / (2.0 * h);
        let d2 = (p.eval(s + h) - 2.0 * p.eval(s) + p.eval(s - h)) / (h * h);
        assert!((d[0] - p.eval(s)).abs() < 1e-15);
        assert!((d[1] - d1).abs() < 1e-8);
        assert!((d[2] - d2).abs() < 1e-6);
        let p1 = |x: f64| p.derivs(x)[2];
        assert!((d[3] - (p1(s + h) - p1(s - h)) / (2.0 * h)).abs() < 1e-7);
    }

    #[test]
    fn difference_is_accurate_for_tiny_steps() {
        let p = sample();
        let s = 1.3;
        let d = 1e-12;
        let exact = p.derivs(s)[1] * d;
        assert!((p.diff(s, d) - exact).abs() < 1e-10 * exact.abs());
        let big = 0.5;
        assert!((p.diff(s, big) - (p.eval(s + big) - p.eval(s))).abs() < 1e-14);
    }

    #[test]
    fn reflection_matches_direct_evaluation() {
        let p = sample();
        let r = p.reflected(2.1);
        for x in [0.0, 0.3, 1.7] {
            assert!((r.eval(x) - p.eval(2.1 - x)).abs() < 1e-13);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(TrigPoly::new(vec![1.0], vec![1.0], 1.0).is_err());
        assert!(TrigPoly::new(vec![1.0], vec![], 0.0).is_err());
        assert_eq!(TrigPoly::constant(3.0).degree(), 0);
    }
}
