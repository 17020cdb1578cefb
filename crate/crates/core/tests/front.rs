mod common;

use std::f64::consts::{PI, TAU};

use common::*;
use frontwave::flow::IntegratorConfig;
use frontwave::front::{length_series, log_times, slope_estimate, FrontConfig, FrontEnsemble};
use frontwave::geometry::{Rect, SurfaceModel, SurfacePoint};
use frontwave::Error;

fn run(surface: &SurfaceModel, a: SurfacePoint, t: f64, cfg: FrontConfig) -> FrontEnsemble {
    let mut e = FrontEnsemble::new(&geodesic(), surface, a, cfg, IntegratorConfig::default()).unwrap();
    e.evolve(t).unwrap();
    e
}

#[test]
fn flat_torus_front_is_a_circle_of_radius_t() {
    let f = SurfaceModel::flat_torus();
    let r = length_series(
        &geodesic(),
        &f,
        SurfacePoint::new(0.2, 0.3),
        &[1.0, 2.0, 4.0],
        FrontConfig::default(),
        IntegratorConfig::default(),
        &[],
    )
    .unwrap();
    for (t, l) in r.times.iter().zip(&r.lengths) {
        assert!((l - TAU * t).abs() <= 1e-9 * TAU * t, "t = {t}: {l}");
    }
    assert_eq!(r.refined_counts, vec![0, 0, 0]);
}

#[test]
fn round_sphere_pole_front_is_a_parallel() {
    let s = round_sphere();
    let r = length_series(
        &geodesic(),
        &s,
        SurfacePoint::new(0.0, 0.0),
        &[PI / 2.0, PI],
        FrontConfig::default(),
        IntegratorConfig::default(),
        &[],
    )
    .unwrap();
    assert!((r.lengths[0] - TAU).abs() < 1e-8);
    assert!(r.lengths[1].abs() < 1e-6);
    let times: Vec<f64> = (1..=40).map(|k| 0.5 * k as f64).collect();
    let r = length_series(
        &geodesic(),
        &s,
        SurfacePoint::new(0.0, PI),
        &times,
        FrontConfig::default(),
        IntegratorConfig::default(),
        &[],
    )
    .unwrap();
    for (t, l) in r.times.iter().zip(&r.lengths) {
        assert!((l - TAU * t.sin().abs()).abs() < 1e-4, "t = {t}: {l}");
    }
    assert!(*r.refined_counts.last().unwrap() <= 8);
}

#[test]
fn n0_below_sixteen_is_rejected() {
    let cfg = FrontConfig { n0: 8, ..FrontConfig::default() };
    let e = FrontEnsemble::new(&geodesic(), &torus(), torus_point(), cfg, IntegratorConfig::default());
    assert!(matches!(e, Err(Error::Config(_))));
}

#[test]
fn separatrix_direction_is_perturbed_with_warning() {
    // On the inner equator the direction omega = 0 is the hyperbolic orbit.
    let e = FrontEnsemble::new(
        &geodesic(),
        &torus(),
        SurfacePoint::new(0.0, PI),
        FrontConfig::default(),
        IntegratorConfig::default(),
    )
    .unwrap();
    assert!(!e.warnings().is_empty());
    let (w0, _) = e.states()[0];
    assert!(w0 > 0.0 && w0 <= 2e-12);
}

#[test]
fn all_pass_mask_and_complement() {
    let s = torus();
    let e = run(&s, torus_point(), 8.0, FrontConfig::default());
    let full = e.length(None);
    let all = Rect { theta: [0.0, TAU], s: [0.0, TAU] };
    assert!((e.length(Some(&all)) - full).abs() <= 1e-12 * full);
    let d = Rect { theta: [0.5, 2.5], s: [1.0, 3.0] };
    let mut sum = e.length(Some(&d));
    for c in d.complement(&s) {
        sum += e.length(Some(&c));
    }
    assert!((sum - full).abs() <= 1e-9 * full, "{sum} vs {full}");
}

#[test]
fn length_is_invariant_under_rotation_of_a() {
    let s = torus();
    let a = run(&s, torus_point(), 6.0, FrontConfig::default()).length(None);
    let b = run(&s, SurfacePoint::new(1.234, PI / 2.0), 6.0, FrontConfig::default()).length(None);
    assert!((a - b).abs() <= 1e-8 * a, "{a} vs {b}");
}

#[test]
fn doubling_n0_agrees_within_tolerance() {
    let s = torus();
    let cfg = FrontConfig::default();
    let a = run(&s, torus_point(), 12.0, cfg).length(None);
    let b = run(&s, torus_point(), 12.0, FrontConfig { n0: 2 * cfg.n0, ..cfg }).length(None);
    assert!((a - b).abs() < cfg.tol_front * a, "{a} vs {b}");
}

#[test]
fn refinement_matches_oversampled_uniform_oracle_and_is_needed() {
    let s = torus();
    let t = 6.0;
    let refined = run(&s, torus_point(), t, FrontConfig::default());
    let n = refined.len();
    assert!(refined.refined_count() > 0);
    let loose = FrontConfig { tol_front: 0.99, ..FrontConfig::default() };
    let n_oracle = (10 * n).next_multiple_of(2);
    let oracle = run(&s, torus_point(), t, FrontConfig { n0: n_oracle, max_samples: 4 * n_oracle, ..loose });
    let (a, o) = (refined.length(None), oracle.length(None));
    assert!((a - o).abs() < 1e-3 * o, "{a} vs oracle {o}");
    let coarse = run(&s, torus_point(), t, loose).length(None);
    assert!((coarse - o).abs() > 1e-3 * o, "unrefined {coarse} vs {o}");
}

#[test]
fn polyline_length_approaches_quadrature_length() {
    let e = run(&torus(), torus_point(), 5.0, FrontConfig { tol_front: 1e-6, ..FrontConfig::default() });
    let (l, p) = (e.length(None), e.polyline_length());
    assert!(p <= l * (1.0 + 1e-9) && (l - p) < 1e-3 * l, "{p} vs {l}");
}

#[test]
fn runs_are_bit_identical_across_thread_counts() {
    let go = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            length_series(
                &geodesic(),
                &torus(),
                torus_point(),
                &[2.0, 5.0, 9.0],
                FrontConfig::default(),
                IntegratorConfig::default(),
                &[],
            )
            .unwrap()
        })
    };
    let a = go(1);
    let b = go(3);
    assert_eq!(a.to_csv().unwrap(), b.to_csv().unwrap());
    assert_eq!(a, go(1));
}

#[test]
fn slope_of_exact_line() {
    let t = log_times(100.0, 32, Some(1.0));
    let y: Vec<f64> = t.iter().map(|t| 3.0 * t + 2.0).collect();
    let s = slope_estimate(&t, &y, 0.25).unwrap();
    assert!((s.slope - 3.0).abs() < 1e-12);
    assert_eq!(s.points, 8);
    // |y/t - 3| = 2/t is largest at the window's first time.
    let t0 = t[t.len() - 8];
    assert!((s.uncertainty - 2.0 / t0).abs() < 1e-12);
}

#[test]
fn slope_needs_eight_tail_points() {
    let t = log_times(100.0, 20, None);
    let y = t.clone();
    assert!(matches!(slope_estimate(&t, &y, 0.3), Err(Error::InsufficientTail { points: 6, required: 8 })));
}

#[test]
fn log_times_end_at_horizon() {
    let t = log_times(500.0, 32, None);
    assert_eq!(t.len(), 32);
    assert_eq!(*t.last().unwrap(), 500.0);
    assert!((t[0] - 1.0).abs() < 1e-12);
    assert!(t.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn csv_has_the_documented_columns() {
    let r = length_series(
        &geodesic(),
        &SurfaceModel::flat_torus(),
        SurfacePoint::new(0.0, 0.0),
        &[1.0, 2.0],
        FrontConfig::default(),
        IntegratorConfig::default(),
        &[],
    )
    .unwrap();
    let csv = r.to_csv().unwrap();
    assert!(csv.starts_with("t,length,refined_count,max_pair_error\n"));
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn decreasing_times_are_rejected() {
    let r = length_series(
        &geodesic(),
        &torus(),
        torus_point(),
        &[2.0, 1.0],
        FrontConfig::default(),
        IntegratorConfig::default(),
        &[],
    );
    assert!(matches!(r, Err(Error::InvalidInput(_))));
}
