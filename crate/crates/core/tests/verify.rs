mod common;

use std::f64::consts::{FRAC_PI_4, PI, TAU};

use common::*;
use frontwave::geometry::{SurfaceModel, SurfacePoint};
use frontwave::verify::statphase::log_grid;
use frontwave::verify::*;
use frontwave::Error;

fn quadratic() -> OscillatoryProblem {
    OscillatoryProblem { phase: Smooth::polynomial(vec![0.0, 0.0, 0.5]), amplitude: Amplitude::bump(0.0, 1.0) }
}

#[test]
fn quadratic_phase_leading_term() {
    let t = 50.0;
    let l = statphase_leading(&quadratic(), t).unwrap();
    let mag = (TAU / t).sqrt();
    assert!((l[0] - mag * FRAC_PI_4.cos()).abs() < 1e-14);
    assert!((l[1] - mag * FRAC_PI_4.sin()).abs() < 1e-14);
}

#[test]
fn quadratic_phase_direct_matches_dense_midpoint() {
    let p = quadratic();
    let t = 20.0;
    let n = 400_000;
    let h = 2.0 / n as f64;
    let (mut re, mut im) = (0.0, 0.0);
    for i in 0..n {
        let x = -1.0 + (i as f64 + 0.5) * h;
        let a = p.amplitude.eval(x);
        re += a * (t * 0.5 * x * x).cos() * h;
        im += a * (t * 0.5 * x * x).sin() * h;
    }
    let d = statphase_direct(&p, t).unwrap();
    assert!((d[0] - re).abs() < 1e-9 && (d[1] - im).abs() < 1e-9, "{d:?} vs {re} {im}");
}

#[test]
fn remainder_decays_faster_than_t_to_minus_1_3() {
    let r = statphase_decay_rate(&quadratic(), &log_grid(100.0, 1e4, 7)).unwrap();
    assert_eq!(r.mode, DecayMode::Remainder);
    assert!(r.pass && r.slope <= -1.3, "{}", r.slope);
}

#[test]
fn cosine_phase_matches_leading_term_near_its_minimum() {
    let p = OscillatoryProblem { phase: Smooth::trig(vec![0.0, 1.0], vec![], 1.0), amplitude: Amplitude::bump(PI, 1.0) };
    let c = critical_points(&p).unwrap();
    assert_eq!(c.len(), 1);
    assert!((c[0].x - PI).abs() < 1e-12 && (c[0].s2 - 1.0).abs() < 1e-12);
    let t = 1000.0;
    let d = statphase_direct(&p, t).unwrap();
    let l = statphase_leading(&p, t).unwrap();
    let rel = (d[0] - l[0]).hypot(d[1] - l[1]) / l[0].hypot(l[1]);
    assert!(rel < 2e-3, "{rel}");
}

#[test]
fn degenerate_cubic_is_reported() {
    let p = OscillatoryProblem {
        phase: Smooth::polynomial(vec![0.0, 0.0, 0.0, 1.0 / 3.0]),
        amplitude: Amplitude::bump(0.0, 1.0),
    };
    assert!(matches!(statphase_leading(&p, 10.0), Err(Error::DegenerateCritical { .. })));
    let r = statphase_decay_rate(&p, &log_grid(100.0, 1e4, 5)).unwrap();
    assert_eq!(r.mode, DecayMode::Magnitude);
    assert!(r.pass && (r.slope + 1.0 / 3.0).abs() < 0.05, "{}", r.slope);
}

#[test]
fn zero_amplitude_integrates_to_zero() {
    let mut p = quadratic();
    p.amplitude.poly = vec![0.0];
    assert_eq!(statphase_direct(&p, 10.0).unwrap(), [0.0, 0.0]);
    assert_eq!(statphase_leading(&p, 10.0).unwrap(), [0.0, 0.0]);
}

fn curve() -> [Smooth; 2] {
    [Smooth::trig(vec![0.0, 1.0], vec![], 1.0), Smooth::trig(vec![], vec![0.0, 1.0], 1.0)]
}

fn demo() -> ErgodicProblem {
    ErgodicProblem {
        interval: [0.0, 1.0],
        v: curve(),
        modes: vec![
            Mode { k: [0, 0], a: Smooth::polynomial(vec![1.0, 0.5]), b: Smooth::default() },
            Mode { k: [1, 0], a: Smooth::constant(0.8), b: Smooth::polynomial(vec![0.0, 0.3]) },
            Mode { k: [0, 1], a: Smooth::polynomial(vec![0.5, -0.2]), b: Smooth::default() },
            Mode { k: [2, -1], a: Smooth::polynomial(vec![0.4, 0.4]), b: Smooth::default() },
        ],
    }
}

#[test]
fn ergodic_rhs_matches_dense_grid_over_the_torus() {
    let p = demo();
    let n = 64;
    let mut acc = 0.0;
    for i in 0..n {
        let s = (i as f64 + 0.5) / n as f64;
        for j in 0..n {
            for k in 0..n {
                acc += p.f(s, [j as f64 / n as f64, k as f64 / n as f64]);
            }
        }
    }
    acc /= (n * n * n) as f64;
    assert!((ergodic_rhs(&p).unwrap() - acc).abs() < 1e-4, "{acc}");
    assert!((ergodic_rhs(&p).unwrap() - 1.25).abs() < 1e-15);
}

#[test]
fn ergodic_average_converges() {
    let r = ergodic_convergence(&demo(), &[31.25, 62.5, 125.0, 250.0, 500.0, 1000.0]).unwrap();
    assert!(r.pass, "{r:?}");
    assert!(r.error.last().unwrap() < &0.03);
}

#[test]
fn theta_independent_integrand_is_exact_at_every_t() {
    let p = ErgodicProblem {
        interval: [0.0, 2.0],
        v: curve(),
        modes: vec![Mode { k: [0, 0], a: Smooth::trig(vec![0.5, 1.0], vec![], 2.0), b: Smooth::default() }],
    };
    let rhs = ergodic_rhs(&p).unwrap();
    for t in [0.0, 3.0, 70.0] {
        assert!((ergodic_lhs(&p, t).unwrap() - rhs).abs() < 1e-12);
    }
}

#[test]
fn t_zero_evaluates_at_the_origin_of_the_torus() {
    let p = demo();
    let direct: f64 = {
        let n = 20000;
        (0..n).map(|i| p.f((i as f64 + 0.5) / n as f64, [0.0, 0.0])).sum::<f64>() / n as f64
    };
    assert!((ergodic_lhs(&p, 0.0).unwrap() - direct).abs() < 1e-8);
}

#[test]
fn straight_line_curve_fails_the_hypothesis() {
    let mut p = demo();
    p.v = [Smooth::polynomial(vec![0.0, 1.0]), Smooth::polynomial(vec![0.0, 1.0])];
    assert!(matches!(ergodic_convergence(&p, &[1.0, 2.0, 4.0]), Err(Error::HypothesisFailure(_))));
}

#[test]
fn lhs_is_bounded_by_psi() {
    let p = demo();
    let bound = frontwave::verify::ergodic::psi_integral(&p).unwrap();
    for t in [1.0, 17.0, 90.0] {
        assert!(ergodic_lhs(&p, t).unwrap().abs() <= bound + 1e-12);
    }
}

#[test]
fn round_sphere_pole_front_is_periodic() {
    let setup = Setup::new(round_sphere(), geodesic(), SurfacePoint::new(0.0, 0.0));
    let r = verify_periodic_pole(&setup, 12).unwrap();
    assert!(r.pass && r.relative < 1e-8, "{}", r.relative);
    assert!((r.period - TAU).abs() < 1e-15);
}

#[test]
fn bumpy_sphere_pole_front_is_periodic() {
    let setup = Setup::new(bumpy_sphere(), geodesic(), SurfacePoint::new(0.0, PI));
    let r = verify_periodic_pole(&setup, 12).unwrap();
    assert!(r.pass && r.relative < 1e-8, "{}", r.relative);
}

#[test]
fn periodicity_check_rejects_a_torus() {
    let setup = Setup::new(torus(), geodesic(), torus_point());
    assert!(matches!(verify_periodic_pole(&setup, 8), Err(Error::InvalidInput(_))));
}

#[test]
fn flat_torus_slope_is_two_pi() {
    let mut setup = Setup::new(SurfaceModel::flat_torus(), geodesic(), SurfacePoint::new(0.1, 0.2));
    setup.horizon = 20.0;
    setup.n_times = 12;
    setup.tail_fraction = 0.75;
    let r = verify_theorem(&setup).unwrap();
    assert!((r.predicted_lambda - TAU).abs() < 1e-8, "{}", r.predicted_lambda);
    assert!(r.pass && r.relative_gap < 1e-3, "{}", r.relative_gap);
}

#[test]
fn round_sphere_generic_point_fails_a2() {
    let setup = Setup::new(round_sphere(), geodesic(), SurfacePoint::new(0.0, 1.0));
    match verify_theorem(&setup) {
        Err(Error::AssumptionFailure { assumption, .. }) => assert_eq!(assumption, "A2"),
        other => panic!("{other:?}"),
    }
}
