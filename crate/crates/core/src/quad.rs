//! Gauss-Kronrod quadrature, fixed panel rules and compensated summation.

use crate::error::{Error, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Neumaier compensated accumulator; summation order is the caller's.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(items: I) -> f64 {
    let mut acc = CompensatedSum::new();
    for x in items {
        acc.add(x);
    }
    acc.value()
}

/// One 21-point Kronrod evaluation with its embedded 10-point Gauss rule.
/// Returns `(kronrod, |kronrod - gauss|)`.
pub fn gk21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = fc * WGK[10];
    let mut gauss = 0.0;
    for j in 0..10 {
        let x = half * XGK[j];
        let s = f(center - x) + f(center + x);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * half, ((kron - gauss) * half).abs())
}

/// Same rule applied to complex-valued integrands split into parts.
pub fn gk21_complex<F: FnMut(f64) -> (f64, f64)>(f: &mut F, a: f64, b: f64) -> ((f64, f64), f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = (fc.0 * WGK[10], fc.1 * WGK[10]);
    let mut gauss = (0.0, 0.0);
    for j in 0..10 {
        let x = half * XGK[j];
        let l = f(center - x);
        let r = f(center + x);
        let s = (l.0 + r.0, l.1 + r.1);
        kron.0 += WGK[j] * s.0;
        kron.1 += WGK[j] * s.1;
        if j % 2 == 1 {
            gauss.0 += WG[j / 2] * s.0;
            gauss.1 += WG[j / 2] * s.1;
        }
    }
    let err = ((kron.0 - gauss.0).powi(2) + (kron.1 - gauss.1).powi(2)).sqrt() * half.abs();
    ((kron.0 * half, kron.1 * half), err)
}

#[derive(Clone, Copy, Debug)]
pub struct QuadTol {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for QuadTol {
    fn default() -> Self {
        Self { abs: 1e-12, rel: 1e-12, max_intervals: 2000 }
    }
}

impl QuadTol {
    pub fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel, ..Self::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

/// Globally adaptive Gauss-Kronrod integration (bisect the interval with the
/// largest error estimate). Deterministic: ties are broken by position.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: QuadTol) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult { value: 0.0, error: 0.0, intervals: 0 });
    }
    let (v, e) = gk21(&mut f, a, b);
    let mut segs = vec![Segment { a, b, value: v, error: e }];
    loop {
        let total = compensated_sum(segs.iter().map(|s| s.value));
        let err: f64 = segs.iter().map(|s| s.error).sum();
        if !total.is_finite() {
            return Err(Error::QuadratureFailure(format!("non-finite integrand on [{a}, {b}]")));
        }
        if err <= tol.abs.max(tol.rel * total.abs()) {
            return Ok(QuadResult { value: total, error: err, intervals: segs.len() });
        }
        if segs.len() >= tol.max_intervals {
            // Accept a slightly worse result if the rule has hit rounding.
            if err <= 1e3 * tol.abs.max(tol.rel * total.abs()) {
                return Ok(QuadResult { value: total, error: err, intervals: segs.len() });
            }
            return Err(Error::QuadratureFailure(format!(
                "interval budget exhausted on [{a}, {b}] (error {err:e}, value {total:e})"
            )));
        }
        let (idx, _) = segs
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, be), (i, s)| if s.error > be { (i, s.error) } else { (bi, be) });
        let s = segs.swap_remove(idx);
        let m = 0.5 * (s.a + s.b);
        if m <= s.a.min(s.b) || m >= s.a.max(s.b) {
            // Interval cannot be split further in floating point.
            segs.push(Segment { error: 0.0, ..s });
            continue;
        }
        let (v1, e1) = gk21(&mut f, s.a, m);
        let (v2, e2) = gk21(&mut f, m, s.b);
        segs.push(Segment { a: s.a, b: m, value: v1, error: e1 });
        segs.push(Segment { a: m, b: s.b, value: v2, error: e2 });
        segs.sort_by(|x, y| x.a.total_cmp(&y.a));
    }
}

/// Vector-valued GK21 rule; returns `(values, per-component error)`.
pub fn gk21_vec<const M: usize, F: FnMut(f64) -> [f64; M]>(f: &mut F, a: f64, b: f64) -> ([f64; M], [f64; M]) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron: [f64; M] = std::array::from_fn(|i| fc[i] * WGK[10]);
    let mut gauss = [0.0; M];
    for j in 0..10 {
        let x = half * XGK[j];
        let l = f(center - x);
        let r = f(center + x);
        for i in 0..M {
            let s = l[i] + r[i];
            kron[i] += WGK[j] * s;
            if j % 2 == 1 {
                gauss[i] += WG[j / 2] * s;
            }
        }
    }
    let err = std::array::from_fn(|i| ((kron[i] - gauss[i]) * half).abs());
    (std::array::from_fn(|i| kron[i] * half), err)
}

struct SegmentVec<const M: usize> {
    a: f64,
    b: f64,
    value: [f64; M],
    error: [f64; M],
}

/// Adaptive integration of several integrands sharing one subdivision. Each
/// component must satisfy `err_i <= max(abs, rel |value_i|)`.
pub fn integrate_vec<const M: usize, F: FnMut(f64) -> [f64; M]>(
    mut f: F,
    a: f64,
    b: f64,
    tol: QuadTol,
) -> Result<[f64; M]> {
    if a == b {
        return Ok([0.0; M]);
    }
    let (v, e) = gk21_vec(&mut f, a, b);
    let mut segs = vec![SegmentVec { a, b, value: v, error: e }];
    loop {
        let totals: [f64; M] = std::array::from_fn(|i| compensated_sum(segs.iter().map(|s| s.value[i])));
        let errs: [f64; M] = std::array::from_fn(|i| segs.iter().map(|s| s.error[i]).sum());
        if totals.iter().any(|v| !v.is_finite()) {
            return Err(Error::QuadratureFailure(format!("non-finite integrand on [{a}, {b}]")));
        }
        let ratio = (0..M)
            .map(|i| errs[i] / tol.abs.max(tol.rel * totals[i].abs()))
            .fold(0.0, f64::max);
        if ratio <= 1.0 {
            return Ok(totals);
        }
        if segs.len() >= tol.max_intervals {
            if ratio <= 1e3 {
                return Ok(totals);
            }
            return Err(Error::QuadratureFailure(format!(
                "interval budget exhausted on [{a}, {b}] (error ratio {ratio:e})"
            )));
        }
        let score = |s: &SegmentVec<M>| {
            (0..M)
                .map(|i| s.error[i] / tol.abs.max(tol.rel * totals[i].abs()))
                .fold(0.0, f64::max)
        };
        let (idx, _) = segs
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, be), (i, s)| {
                let e = score(s);
                if e > be {
                    (i, e)
                } else {
                    (bi, be)
                }
            });
        let s = segs.swap_remove(idx);
        let m = 0.5 * (s.a + s.b);
        if m <= s.a.min(s.b) || m >= s.a.max(s.b) {
            segs.push(SegmentVec { error: [0.0; M], ..s });
            continue;
        }
        let (v1, e1) = gk21_vec(&mut f, s.a, m);
        let (v2, e2) = gk21_vec(&mut f, m, s.b);
        segs.push(SegmentVec { a: s.a, b: m, value: v1, error: e1 });
        segs.push(SegmentVec { a: m, b: s.b, value: v2, error: e2 });
        segs.sort_by(|x, y| x.a.total_cmp(&y.a));
    }
}

/// Composite fixed rule on `n` equal panels; returns `(value, embedded error)`.
pub fn composite<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, n: usize) -> (f64, f64) {
    let h = (b - a) / n as f64;
    let mut acc = CompensatedSum::new();
    let mut err = 0.0;
    for i in 0..n {
        let (v, e) = gk21(&mut f, a + i as f64 * h, a + (i + 1) as f64 * h);
        acc.add(v);
        err += e;
    }
    (acc.value(), err)
}

/// Complex composite rule on `n` equal panels.
pub fn composite_complex<F: FnMut(f64) -> (f64, f64)>(mut f: F, a: f64, b: f64, n: usize) -> ((f64, f64), f64) {
    let h = (b - a) / n as f64;
    let mut re = CompensatedSum::new();
    let mut im = CompensatedSum::new();
    let mut err = 0.0;
    for i in 0..n {
        let ((vr, vi), e) = gk21_complex(&mut f, a + i as f64 * h, a + (i + 1) as f64 * h);
        re.add(vr);
        im.add(vi);
        err += e;
    }
    ((re.value(), im.value()), err)
}

/// Integral of `f` over `[a, b]` where `f` has inverse-square-root endpoint
/// behaviour at both ends. Each half is mapped by `s = a + u^2` (resp.
/// `s = b - u^2`) and the caller supplies the transformed integrand
/// `g(u, side)` which must already include the Jacobian `2u`.
pub fn integrate_sqrt_endpoints<G: FnMut(f64, Side) -> f64>(
    mut g: G,
    a: f64,
    b: f64,
    tol: QuadTol,
) -> Result<QuadResult> {
    let half = 0.5 * (b - a);
    let umax = half.sqrt();
    let left = integrate(|u| g(u, Side::Lower), 0.0, umax, tol)?;
    let right = integrate(|u| g(u, Side::Upper), 0.0, umax, tol)?;
    Ok(QuadResult {
        value: left.value + right.value,
        error: left.error + right.error,
        intervals: left.intervals + right.intervals,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Lower,
    Upper,
}

/// Brent root finder on a bracketing interval.
pub fn brent<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, xtol: f64) -> Option<f64> {
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() || !fa.is_finite() || !fb.is_finite() {
        return None;
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Some(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        if d.abs() > tol1 {
            b += d;
        } else {
            b += tol1.copysign(xm);
        }
        fb = f(b);
    }
    Some(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gauss_kronrod_is_exact_on_polynomials() {
        let (v, e) = gk21(&mut |x: f64| x.powi(20) - 3.0 * x.powi(7), -1.0, 2.0);
        let exact = (2f64.powi(21) + 1.0) / 21.0 - 3.0 * (2f64.powi(8) - 1.0) / 8.0;
        assert!((v - exact).abs() < 1e-9 * exact.abs());
        assert!(e < 1e-3 * exact.abs());
    }

    #[test]
    fn adaptive_handles_sqrt_singularity() {
        let r = integrate(|x| 1.0 / x.sqrt(), 0.0, 1.0, QuadTol::new(1e-12, 1e-12)).unwrap();
        assert!((r.value - 2.0).abs() < 1e-10);
    }

    #[test]
    fn sqrt_endpoint_substitution_is_spectral() {
        // int_{-1}^{1} dx / sqrt(1 - x^2) = pi
        let (a, b) = (-1.0_f64, 1.0_f64);
        let r = integrate_sqrt_endpoints(
            |u, side| {
                let x = match side {
                    Side::Lower => a + u * u,
                    Side::Upper => b - u * u,
                };
                // 1 - x^2 = (x - a)(b - x) = u^2 (b - x) or u^2 (x - a)
                let other = match side {
                    Side::Lower => b - x,
                    Side::Upper => x - a,
                };
                2.0 / other.sqrt()
            },
            a,
            b,
            QuadTol::new(1e-14, 1e-14),
        )
        .unwrap();
        assert!((r.value - PI).abs() < 1e-13, "{}", r.value - PI);
        assert!(r.intervals <= 4);
    }

    #[test]
    fn vector_rule_matches_scalar_rule() {
        let v = integrate_vec(|x: f64| [x.exp(), 1.0 / (1.0 + x * x)], 0.0, 3.0, QuadTol::new(1e-14, 1e-14)).unwrap();
        assert!((v[0] - (3f64.exp() - 1.0)).abs() < 1e-12);
        assert!((v[1] - 3f64.atan()).abs() < 1e-14);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let xs = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(xs), 2.0);
    }

    #[test]
    fn brent_finds_cosine_root() {
        let r = brent(|x: f64| x.cos(), 1.0, 2.0, 1e-15).unwrap();
        assert!((r - PI / 2.0).abs() < 1e-14);
        assert!(brent(|x: f64| x * x + 1.0, -1.0, 1.0, 1e-12).is_none());
    }
}
