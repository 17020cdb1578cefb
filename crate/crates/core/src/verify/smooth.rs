//! Coefficient-represented scalar functions: a polynomial plus a
//! trigonometric series, `sum p_k x^k + sum (c_k cos k w x + s_k sin k w x)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Smooth {
    pub poly: Vec<f64>,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
    pub freq: f64,
}

impl Default for Smooth {
    fn default() -> Self {
        Self::polynomial(Vec::new())
    }
}

impl Smooth {
    pub fn polynomial(poly: Vec<f64>) -> Self {
        Self { poly, cos: Vec::new(), sin: Vec::new(), freq: 1.0 }
    }

    pub fn trig(cos: Vec<f64>, sin: Vec<f64>, freq: f64) -> Self {
        Self { poly: Vec::new(), cos, sin, freq }
    }

    pub fn constant(c: f64) -> Self {
        Self::polynomial(vec![c])
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.poly.iter().chain(&self.cos).chain(&self.sin).all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidInput("non-finite coefficient".into()));
        }
        if (self.cos.len() > 1 || self.sin.len() > 1) && !(self.freq.is_finite() && self.freq > 0.0) {
            return Err(Error::InvalidInput(format!("frequency {} must be positive", self.freq)));
        }
        Ok(())
    }

    pub fn is_constant(&self) -> bool {
        self.poly.iter().skip(1).all(|&c| c == 0.0)
            && self.cos.iter().skip(1).all(|&c| c == 0.0)
            && self.sin.iter().skip(1).all(|&c| c == 0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.deriv(x, 0)
    }

    /// `n`-th derivative at `x`.
    pub fn deriv(&self, x: f64, n: u32) -> f64 {
        let mut v = 0.0;
        // Horner on the n-th derivative coefficients.
        for k in (n as usize..self.poly.len()).rev() {
            let fall: f64 = (0..n).map(|j| (k - j as usize) as f64).product();
            v = v * x + self.poly[k] * fall;
        }
        let shift = n as f64 * std::f64::consts::FRAC_PI_2;
        for (k, &c) in self.cos.iter().enumerate() {
            if c != 0.0 {
                let w = k as f64 * self.freq;
                v += c * w.powi(n as i32) * (w * x + shift).cos();
            }
        }
        for (k, &c) in self.sin.iter().enumerate() {
            if c != 0.0 {
                let w = k as f64 * self.freq;
                v += c * w.powi(n as i32) * (w * x + shift).sin();
            }
        }
        v
    }

    /// Exact integral over `[a, b]`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        let mut v = 0.0;
        for (k, &c) in self.poly.iter().enumerate() {
            let p = (k + 1) as i32;
            v += c * (b.powi(p) - a.powi(p)) / p as f64;
        }
        for (k, &c) in self.cos.iter().enumerate() {
            if k == 0 {
                v += c * (b - a);
            } else {
                let w = k as f64 * self.freq;
                v += c * ((w * b).sin() - (w * a).sin()) / w;
            }
        }
        for (k, &c) in self.sin.iter().enumerate() {
            if k > 0 {
                let w = k as f64 * self.freq;
                v -= c * ((w * b).cos() - (w * a).cos()) / w;
            }
        }
        v
    }

    /// Upper bound of `|f|` on `[a, b]` from a fine scan.
    pub fn max_abs(&self, a: f64, b: f64) -> f64 {
        let n = 4096;
        (0..=n).map(|i| self.eval(a + (b - a) * i as f64 / n as f64).abs()).fold(0.0, f64::max)
    }
}
