//! Explicit Runge-Kutta 8(5,3) with step-size control (Dormand-Prince
//! coefficients, Hairer-Wanner error norm) for autonomous systems.

use crate::error::{Error, Result};

#[allow(clippy::excessive_precision)]
const A: [&[f64]; 11] = [
    &[5.26001519587677318785587544488E-2],
    &[1.97250569845378994544595329183E-2, 5.91751709536136983633785987549E-2],
    &[2.95875854768068491816892993775E-2, 0.0, 8.87627564304205475450678981324E-2],
    &[2.41365134159266685502369798665E-1, 0.0, -8.84549479328286085344864962717E-1, 9.24834003261792003115737966543E-1],
    &[3.7037037037037037037037037037E-2, 0.0, 0.0, 1.70828608729473871279604482173E-1, 1.25467687566822425016691814123E-1],
    &[3.7109375E-2, 0.0, 0.0, 1.70252211019544039314978060272E-1, 6.02165389804559606850219397283E-2, -1.7578125E-2],
    &[
        3.70920001185047927108779319836E-2,
        0.0,
        0.0,
        1.70383925712239993810214054705E-1,
        1.07262030446373284651809199168E-1,
        -1.53194377486244017527936158236E-2,
        8.27378916381402288758473766002E-3,
    ],
    &[
        6.24110958716075717114429577812E-1,
        0.0,
        0.0,
        -3.36089262944694129406857109825E0,
        -8.68219346841726006818189891453E-1,
        2.75920996994467083049415600797E1,
        2.01540675504778934086186788979E1,
        -4.34898841810699588477366255144E1,
    ],
    &[
        4.77662536438264365890433908527E-1,
        0.0,
        0.0,
        -2.48811461997166764192642586468E0,
        -5.90290826836842996371446475743E-1,
        2.12300514481811942347288949897E1,
        1.52792336328824235832596922938E1,
        -3.32882109689848629194453265587E1,
        -2.03312017085086261358222928593E-2,
    ],
    &[
        -9.3714243008598732571704021658E-1,
        0.0,
        0.0,
        5.18637242884406370830023853209E0,
        1.09143734899672957818500254654E0,
        -8.14978701074692612513997267357E0,
        -1.85200656599969598641566180701E1,
        2.27394870993505042818970056734E1,
        2.49360555267965238987089396762E0,
        -3.0467644718982195003823669022E0,
    ],
    &[
        2.27331014751653820792359768449E0,
        0.0,
        0.0,
        -1.05344954667372501984066689879E1,
        -2.00087205822486249909675718444E0,
        -1.79589318631187989172765950534E1,
        2.79488845294199600508499808837E1,
        -2.85899827713502369474065508674E0,
        -8.87285693353062954433549289258E0,
        1.23605671757943030647266201528E1,
        6.43392746015763530355970484046E-1,
    ],
];

#[allow(clippy::excessive_precision)]
const B: [f64; 12] = [
    5.42937341165687622380535766363E-2,
    0.0,
    0.0,
    0.0,
    0.0,
    4.45031289275240888144113950566E0,
    1.89151789931450038304281599044E0,
    -5.8012039600105847814672114227E0,
    3.1116436695781989440891606237E-1,
    -1.52160949662516078556178806805E-1,
    2.01365400804030348374776537501E-1,
    4.47106157277725905176885569043E-2,
];

#[allow(clippy::excessive_precision)]
const BHH: [f64; 3] = [
    0.244094488188976377952755905512E+00,
    0.733846688281611857341361741547E+00,
    0.220588235294117647058823529412E-01,
];

#[allow(clippy::excessive_precision)]
const ER: [f64; 12] = [
    0.1312004499419488073250102996E-01,
    0.0,
    0.0,
    0.0,
    0.0,
    -0.1225156446376204440720569753E+01,
    -0.4957589496572501915214079952E+00,
    0.1664377182454986536961530415E+01,
    -0.3503288487499736816886487290E+00,
    0.3341791187130174790297318841E+00,
    0.8192320648511571246570742613E-01,
    -0.2235530786388629525884427845E-01,
];

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.333;
const FAC_MAX: f64 = 6.0;
const ALPHA: f64 = 1.0 / 8.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdeConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for OdeConfig {
    fn default() -> Self {
        Self { rel_tol: 1e-10, abs_tol: 1e-12, max_step: f64::INFINITY, max_steps: 5_000_000 }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct OdeOutcome<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    /// Suggested next step size.
    pub h: f64,
    /// `true` if the stop predicate fired before `t1`.
    pub stopped: bool,
    pub accepted: usize,
    pub rejected: usize,
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, ks: &[[f64; N]], coeffs: &[f64]) -> [f64; N] {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (k, &c) in ks.iter().zip(coeffs) {
            if c != 0.0 {
                acc += c * k[i];
            }
        }
        *o += h * acc;
    }
    out
}

fn initial_step<const N: usize, F>(f: &mut F, y: &[f64; N], f0: &[f64; N], cfg: &OdeConfig) -> Result<f64>
where
    F: FnMut(&[f64; N]) -> Result<[f64; N]>,
{
    let sk = |i: usize| cfg.abs_tol + cfg.rel_tol * y[i].abs();
    let dnf: f64 = (0..N).map(|i| (f0[i] / sk(i)).powi(2)).sum();
    let dny: f64 = (0..N).map(|i| (y[i] / sk(i)).powi(2)).sum();
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 { 1e-6 } else { 0.01 * (dny / dnf).sqrt() };
    h = h.min(cfg.max_step);
    let y1: [f64; N] = std::array::from_fn(|i| y[i] + h * f0[i]);
    let f1 = f(&y1)?;
    let der2 = (0..N).map(|i| ((f1[i] - f0[i]) / sk(i)).powi(2)).sum::<f64>().sqrt() / h;
    let der12 = der2.max(dnf.sqrt());
    let h1 = if der12 <= 1e-15 { (1e-6f64).max(h * 1e-3) } else { (0.01 / der12).powf(1.0 / 8.0) };
    Ok((100.0 * h).min(h1).min(cfg.max_step))
}

/// Integrate `y' = f(y)` from `t0` to `t1` (`t1 >= t0`). `h0` seeds the step
/// size; pass `None` to estimate it. After every accepted step `stop(t, y)`
/// is consulted; if it returns `true` the integration halts there.
pub fn integrate<const N: usize, F, S>(
    mut f: F,
    y0: [f64; N],
    t0: f64,
    t1: f64,
    h0: Option<f64>,
    cfg: &OdeConfig,
    mut stop: S,
) -> Result<OdeOutcome<N>>
where
    F: FnMut(&[f64; N]) -> Result<[f64; N]>,
    S: FnMut(f64, &[f64; N]) -> bool,
{
    if t1 < t0 {
        return Err(Error::InvalidInput(format!("integration end {t1} precedes start {t0}")));
    }
    let mut t = t0;
    let mut y = y0;
    if t1 == t0 {
        return Ok(OdeOutcome { t, y, h: h0.unwrap_or(0.0), stopped: false, accepted: 0, rejected: 0 });
    }
    let mut k1 = f(&y)?;
    let mut h = match h0 {
        Some(h) if h > 0.0 => h.min(cfg.max_step),
        _ => initial_step(&mut f, &y, &k1, cfg)?,
    };
    let mut accepted = 0;
    let mut rejected = 0;
    let mut last_rejected = false;
    let mut ks = [[0.0; N]; 12];
    loop {
        if accepted + rejected >= cfg.max_steps {
            return Err(Error::StepFailure { t, reason: format!("step budget {} exhausted", cfg.max_steps) });
        }
        let last = t + h >= t1 || t1 - (t + h) <= 1e-14 * t1.abs().max(1.0);
        let h_step = if last { t1 - t } else { h };
        if h_step.abs() <= 16.0 * f64::EPSILON * t.abs().max(1.0) && !last {
            return Err(Error::StepFailure { t, reason: format!("step size underflow ({h_step:e})") });
        }
        ks[0] = k1;
        let mut stage_ok = true;
        for s in 1..12 {
            let ys = axpy(&y, h_step, &ks[..s], A[s - 1]);
            match f(&ys) {
                Ok(k) if k.iter().all(|v| v.is_finite()) => ks[s] = k,
                Ok(_) => {
                    stage_ok = false;
                    break;
                }
                Err(e @ Error::PoleEvaluation { .. }) => {
                    if h_step < 1e-12 {
                        return Err(e);
                    }
                    stage_ok = false;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if !stage_ok {
            h *= 0.25;
            rejected += 1;
            last_rejected = true;
            continue;
        }
        let y_new = axpy(&y, h_step, &ks, &B);
        let mut err5 = 0.0;
        let mut err3 = 0.0;
        for i in 0..N {
            let sk = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(y_new[i].abs());
            let bsum: f64 = (0..12).map(|s| B[s] * ks[s][i]).sum();
            let e3 = bsum - BHH[0] * ks[0][i] - BHH[1] * ks[8][i] - BHH[2] * ks[11][i];
            let e5: f64 = (0..12).map(|s| ER[s] * ks[s][i]).sum();
            err5 += (e5 / sk).powi(2);
            err3 += (e3 / sk).powi(2);
        }
        let mut deno = err5 + 0.01 * err3;
        if deno <= 0.0 {
            deno = 1.0;
        }
        let err = h_step.abs() * err5 * (1.0 / (N as f64 * deno)).sqrt();
        if !err.is_finite() {
            h *= 0.25;
            rejected += 1;
            last_rejected = true;
            continue;
        }
        let fac11 = err.powf(ALPHA);
        if err <= 1.0 {
            let mut fac = fac11 / SAFETY;
            fac = fac.clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            let mut h_new = h_step / fac;
            if last_rejected {
                h_new = h_new.min(h_step);
            }
            last_rejected = false;
            accepted += 1;
            y = y_new;
            t = if last { t1 } else { t + h_step };
            k1 = f(&y)?;
            let h_keep = if last { h } else { h_new.min(cfg.max_step) };
            if stop(t, &y) {
                return Ok(OdeOutcome { t, y, h: h_keep, stopped: true, accepted, rejected });
            }
            if last {
                return Ok(OdeOutcome { t, y, h: h_keep, stopped: false, accepted, rejected });
            }
            h = h_keep;
        } else {
            let fac = (fac11 / SAFETY).min(1.0 / FAC_MIN);
            h = h_step / fac;
            rejected += 1;
            last_rejected = true;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oscillator(y: &[f64; 2]) -> Result<[f64; 2]> {
        Ok([y[1], -y[0]])
    }

    #[test]
    fn harmonic_oscillator_to_tight_tolerance() {
        let cfg = OdeConfig { rel_tol: 1e-12, abs_tol: 1e-14, ..OdeConfig::default() };
        let out = integrate(oscillator, [1.0, 0.0], 0.0, 50.0, None, &cfg, |_, _| false).unwrap();
        assert!((out.y[0] - 50f64.cos()).abs() < 1e-10);
        assert!((out.y[1] + 50f64.sin()).abs() < 1e-10);
        assert_eq!(out.t, 50.0);
    }

    #[test]
    fn fixed_steps_converge_at_eighth_order() {
        // Force equal steps through max_step with loose tolerance.
        let run = |h: f64| {
            let cfg = OdeConfig { rel_tol: 1.0, abs_tol: 1.0, max_step: h, ..OdeConfig::default() };
            let out = integrate(oscillator, [1.0, 0.0], 0.0, 4.0, Some(h), &cfg, |_, _| false).unwrap();
            (out.y[0] - 4f64.cos()).abs()
        };
        let e1 = run(0.4);
        let e2 = run(0.2);
        let order = (e1 / e2).log2();
        assert!(order > 7.5 && order < 9.0, "observed order {order}");
    }

    #[test]
    fn stop_predicate_halts_integration() {
        let cfg = OdeConfig::default();
        let out = integrate(oscillator, [1.0, 0.0], 0.0, 10.0, None, &cfg, |_, y| y[0] < 0.0).unwrap();
        assert!(out.stopped);
        assert!(out.t > std::f64::consts::FRAC_PI_2 && out.t < 10.0);
    }

    #[test]
    fn deterministic_across_calls() {
        let cfg = OdeConfig::default();
        let a = integrate(oscillator, [0.3, 0.7], 0.0, 33.3, None, &cfg, |_, _| false).unwrap();
        let b = integrate(oscillator, [0.3, 0.7], 0.0, 33.3, None, &cfg, |_, _| false).unwrap();
        assert_eq!(a.y, b.y);
    }
}
