mod common;

use std::f64::consts::{PI, TAU};

use common::*;
use frontwave::actions::*;
use frontwave::flow::{advance, IntegratorConfig, PhaseState};
use frontwave::geometry::{SurfaceModel, SurfacePoint};
use frontwave::trig::TrigPoly;
use frontwave::Error;

fn torus_actions() -> Actions {
    Actions::new(&torus(), &geodesic(), ActionTol::default()).unwrap()
}

fn wrap(d: f64, per: f64) -> f64 {
    d - per * (d / per).round()
}

/// Simpson rule with `n` (even) panels.
fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

#[test]
fn torus_chart_count_matches_dense_scan() {
    // Connected families of (sign p_theta, regime, sign p_s) over a fine
    // Clairaut grid: circulating where 1 - c^2 / a^2 > 0 for every s.
    let a = |s: f64| 2.0 + s.cos();
    let mut labels = Vec::new();
    let n = 6000;
    for i in 1..n {
        let c = -3.0 + 6.0 * i as f64 / n as f64;
        if c == 0.0 {
            continue;
        }
        let circ = (0..720).all(|k| 1.0 - c * c / a(TAU * k as f64 / 720.0).powi(2) > 0.0);
        let signs: &[i8] = if circ { &[-1, 1] } else { &[0] };
        for &ps in signs {
            labels.push((c.signum() as i8, circ, ps));
        }
    }
    labels.sort();
    labels.dedup();
    let act = torus_actions();
    assert_eq!(labels.len(), 6);
    assert_eq!(act.charts().len(), labels.len());
    let osc = act.charts().iter().filter(|c| c.regime == Regime::Oscillating).count();
    assert_eq!(osc, 2);
}

#[test]
fn circulating_p2_matches_trapezoid_oracle() {
    let act = torus_actions();
    let chart = act.charts().iter().find(|c| c.regime == Regime::Circulating && c.c_sign > 0.0).unwrap();
    let c: f64 = 0.5;
    let n = 2048;
    let oracle = (0..n)
        .map(|i| {
            let s = TAU * i as f64 / n as f64;
            (1.0 - c * c / (2.0 + s.cos()).powi(2)).sqrt()
        })
        .sum::<f64>()
        / n as f64;
    let p2 = act.action_p2(chart, TAU * c).unwrap();
    assert!((p2 - oracle).abs() < 1e-10, "{p2} vs {oracle}");
}

#[test]
fn near_meridian_period_is_two_pi_over_speed() {
    let act = torus_actions();
    let chart = act.charts().iter().find(|c| c.regime == Regime::Circulating && c.c_sign > 0.0).unwrap();
    let nu = act.frequencies(chart, TAU * 1e-9).unwrap();
    assert!((nu[1] - 1.0 / TAU).abs() < 1e-9, "{nu:?}");
    assert!(nu[0].abs() < 1e-8);
}

#[test]
fn round_sphere_p2_is_one_minus_clairaut() {
    let act = Actions::new(&round_sphere(), &geodesic(), ActionTol::default()).unwrap();
    assert!(act.charts().iter().all(|c| c.regime == Regime::Oscillating));
    for chart in act.charts() {
        for u in [0.1, 0.4, 0.8] {
            let c = chart.c_sign * u;
            let p2 = act.action_p2(chart, TAU * c).unwrap();
            assert!((p2 - (1.0 - u)).abs() < 1e-9, "{p2} at c = {c}");
        }
    }
}

#[test]
fn frequency_routes_agree() {
    let act = torus_actions();
    for chart in act.charts() {
        let (lo, hi) = act.sigma_range(chart);
        for f in [0.2, 0.5, 0.8] {
            let sigma = lo + f * (hi - lo);
            let a = act.frequencies(chart, sigma).unwrap();
            let b = act.frequencies_implicit(chart, sigma).unwrap();
            let scale = a[0].hypot(a[1]);
            assert!((a[0] - b[0]).abs() < 1e-6 * scale && (a[1] - b[1]).abs() < 1e-6 * scale, "{a:?} {b:?}");
        }
    }
}

#[test]
fn a2_passes_on_torus_and_flat_and_fails_on_round_sphere() {
    let act = torus_actions();
    for chart in act.charts() {
        assert!(check_a2(&act, chart, 8).unwrap().pass);
    }
    let flat = Actions::new(&SurfaceModel::flat_torus(), &geodesic(), ActionTol::default()).unwrap();
    let r = check_a2(&flat, &flat.charts()[0], 8).unwrap();
    assert!(r.samples.iter().all(|s| s.orders == Some((1, 2))));
    let sphere = Actions::new(&round_sphere(), &geodesic(), ActionTol::default()).unwrap();
    for chart in sphere.charts() {
        let r = check_a2(&sphere, chart, 8).unwrap();
        assert!(r.samples.iter().all(|s| s.orders.is_none()));
    }
}

#[test]
fn torus_chart_conjugates_the_flow() {
    let act = torus_actions();
    let cfg = IntegratorConfig::default();
    let t = 20.0;
    let picks = [(0.3, [0.1, 0.7]), (0.6, [0.45, 0.2]), (0.25, [0.9, 0.33])];
    for chart in act.charts() {
        for &(f, th) in &picks {
            let (lo, hi) = act.sigma_range(chart);
            let sigma = lo + f * (hi - lo);
            let nu = act.frequencies(chart, sigma).unwrap();
            let start = act.torus_chart(chart, sigma, th).unwrap();
            let h = geodesic().value(&torus(), &start).unwrap();
            assert!((h - 0.5).abs() < 1e-9);
            let end = advance(&geodesic(), &torus(), &PhaseState::new(start, None), 0.0, t, &cfg).unwrap().point;
            let want = act.torus_chart(chart, sigma, [th[0] + t * nu[0], th[1] + t * nu[1]]).unwrap();
            let d = wrap(end.theta - want.theta, TAU).hypot(wrap(end.s - want.s, TAU));
            assert!(d < 1e-5, "chart {} sigma {sigma}: {d}", chart.id);
        }
    }
}

#[test]
fn count_na_matches_omega_scan() {
    let act = torus_actions();
    let a = SurfacePoint::new(0.0, 0.0);
    let fiber = geodesic().fiber(&torus(), a).unwrap();
    let n = 20000;
    let pts: Vec<_> = (0..n).map(|i| fiber.point(TAU * (i as f64 + 0.5) / n as f64)).collect();
    for chart in act.charts() {
        let (lo, hi) = act.sigma_range(chart);
        for f in [0.3, 0.7] {
            let c = (lo + f * (hi - lo)) / TAU;
            // Crossings of p_theta = c with the covector on this chart's side.
            let mut count = 0;
            for i in 0..n {
                let (p, q) = (pts[i], pts[(i + 1) % n]);
                if (p.p_theta - c) * (q.p_theta - c) < 0.0 {
                    let ps_ok = chart.regime != Regime::Circulating || p.p_s * chart.ps_sign > 0.0;
                    count += ps_ok as u8;
                }
            }
            assert_eq!(act.count_na(chart, TAU * c, a).unwrap(), count, "chart {} c {c}", chart.id);
        }
    }
    let osc = act.charts().iter().find(|c| c.regime == Regime::Oscillating).unwrap();
    let (lo, hi) = act.sigma_range(osc);
    assert_eq!(act.count_na(osc, 0.5 * (lo + hi), a).unwrap(), 2);
}

#[test]
fn count_na_is_zero_when_the_band_misses_a() {
    // Inner equator: oscillating tori with |c| > 1 never reach s = pi.
    let act = torus_actions();
    let a = SurfacePoint::new(0.0, PI);
    let osc = act.charts().iter().find(|c| c.regime == Regime::Oscillating).unwrap();
    let (lo, hi) = act.sigma_range(osc);
    assert_eq!(act.count_na(osc, 0.5 * (lo + hi), a).unwrap(), 0);
}

#[test]
fn a3_a4_torus_exceptional_sets_match_scan() {
    let act = torus_actions();
    let a = torus_point();
    let r = check_a3_a4(&act, a).unwrap();
    assert!(r.finite && r.failure.is_none());
    assert_eq!(r.criticals, vec![0.0, PI]);
    let fiber = geodesic().fiber(&torus(), a).unwrap();
    let n = 100_000;
    let mut scan = Vec::new();
    for i in 0..n {
        let (w0, w1) = (TAU * i as f64 / n as f64, TAU * (i + 1) as f64 / n as f64);
        let (c0, c1) = (fiber.point(w0).p_theta.abs() - 1.0, fiber.point(w1).p_theta.abs() - 1.0);
        if c0 * c1 < 0.0 {
            scan.push(0.5 * (w0 + w1));
        }
    }
    assert_eq!(r.z_hits.len(), 4);
    assert_eq!(scan.len(), 4);
    for (x, y) in r.z_hits.iter().zip(&scan) {
        assert!((x - y).abs() < 1e-4);
    }
}

#[test]
fn pole_source_is_an_assumption_failure() {
    let act = Actions::new(&bumpy_sphere(), &geodesic(), ActionTol::default()).unwrap();
    let r = check_a3_a4(&act, SurfacePoint::new(0.0, 0.0)).unwrap();
    assert!(r.failure.is_some());
    assert!(matches!(act.lambda(SurfacePoint::new(0.0, 0.0)), Err(Error::AssumptionFailure { .. })));
}

#[test]
fn degenerate_critical_point_is_a_morse_violation() {
    // a = 2 + cos^3 s has a' = a'' = 0 at s = pi / 2.
    let s = SurfaceModel::revolution_torus(TrigPoly::new(vec![2.0, 0.75, 0.0, 0.25], vec![], 1.0).unwrap(), TAU).unwrap();
    assert!(matches!(Actions::new(&s, &geodesic(), ActionTol::default()), Err(Error::MorseViolation { .. })));
}

#[test]
fn oscillating_p2_is_monotone() {
    let act = torus_actions();
    for chart in act.charts().iter().filter(|c| c.regime == Regime::Oscillating) {
        let (lo, hi) = act.sigma_range(chart);
        let v: Vec<f64> = (1..40).map(|i| act.action_p2(chart, lo + (hi - lo) * i as f64 / 40.0).unwrap()).collect();
        let up = v.windows(2).all(|w| w[1] > w[0]);
        let down = v.windows(2).all(|w| w[1] < w[0]);
        assert!(up || down);
    }
}

#[test]
fn type_l_coefficient_matches_separatrix_expansion() {
    // Near the hyperbolic circle 2E - c^2 / a^2 ~ delta + u^2 (a_min = a'' = 1),
    // so dp2/dc ~ (k / 2 pi) log delta with k = 1 for a full loop
    // (circulating) and k = 2 for the two half-loops of an oscillating band.
    // In sigma = 2 pi c this gives |phi1| = k / (4 pi^2).
    let act = torus_actions();
    for chart in act.charts() {
        let fit = typel_fit(&act, chart, 24).unwrap();
        let k = if chart.regime == Regime::Oscillating { 2.0 } else { 1.0 };
        let oracle = k / (4.0 * PI * PI);
        assert!((fit.phi1.abs() - oracle).abs() < 0.02 * oracle, "{} vs {oracle}", fit.phi1);
        assert!(fit.residual <= 1e-4 * fit.range);
    }
}

#[test]
fn type_l_fit_needs_a_hyperbolic_end() {
    let act = Actions::new(&round_sphere(), &geodesic(), ActionTol::default()).unwrap();
    assert!(matches!(typel_fit(&act, &act.charts()[0], 12), Err(Error::WrongBoundaryType(_))));
}

#[test]
fn density_is_grid_converged() {
    // One chart per regime; the others are mirror images.
    let act = torus_actions();
    for regime in [Regime::Circulating, Regime::Oscillating] {
        let chart = act.charts().iter().find(|c| c.regime == regime && c.c_sign > 0.0).unwrap();
        let (lo, hi) = act.sigma_range(chart);
        let sigma = lo + 0.45 * (hi - lo);
        let coarse = act.density_grid(chart, sigma, 64).unwrap();
        let fine = act.density_grid(chart, sigma, 128).unwrap();
        assert!((coarse - fine).abs() < 1e-3 * fine, "{coarse} {fine}");
        let d = act.density_dsigma(chart, sigma).unwrap();
        assert!((d - fine).abs() < 1e-3 * fine, "{d} {fine}");
    }
}

#[test]
fn density_is_reparametrization_invariant() {
    // sigma = g(tau) = tau^3 + tau over an interior piece of each chart.
    let act = torus_actions();
    for chart in act.charts() {
        let (lo, hi) = act.sigma_range(chart);
        let (a, b) = (lo + 0.2 * (hi - lo), lo + 0.8 * (hi - lo));
        let g = |t: f64| t * t * t + t;
        let inv = |s: f64| {
            let (mut x, mut y) = (-5.0, 5.0);
            for _ in 0..200 {
                let m = 0.5 * (x + y);
                if g(m) < s { x = m } else { y = m }
            }
            0.5 * (x + y)
        };
        let direct = simpson(|s| act.density_dsigma(chart, s).unwrap(), a, b, 64);
        let reparam = simpson(
            |t| {
                let s = g(t);
                let w = act.action_data(chart, s).unwrap().dnu_dsigma;
                let dg = 3.0 * t * t + 1.0;
                act.density_for_w(chart, s, [w[0] * dg, w[1] * dg]).unwrap()
            },
            inv(a),
            inv(b),
            64,
        );
        assert!((direct - reparam).abs() < 1e-3 * direct, "{direct} {reparam}");
    }
}

#[test]
fn lambda_tail_shrinks_geometrically() {
    let act = torus_actions();
    let r = act.lambda(torus_point()).unwrap();
    assert!(r.tail < 1e-4 * r.lambda, "{} / {}", r.tail, r.lambda);
    for c in r.charts.iter().filter(|c| !c.tail_steps.is_empty()) {
        let e: Vec<f64> = c.tail_steps.iter().map(|s| s.estimate).collect();
        let n = e.len();
        assert!(n >= 3 && e[n - 1] < e[0] * 0.5, "{e:?}");
    }
}

#[test]
fn lambda_is_rotation_invariant_and_flat_is_two_pi() {
    let act = torus_actions();
    let l0 = act.lambda(torus_point()).unwrap().lambda;
    let l1 = act.lambda(SurfacePoint::new(2.1, PI / 2.0)).unwrap().lambda;
    assert!((l0 - l1).abs() < 1e-3 * l0, "{l0} {l1}");
    let flat = Actions::new(&SurfaceModel::flat_torus(), &geodesic(), ActionTol::default()).unwrap();
    let l = flat.lambda(SurfacePoint::new(0.3, 0.1)).unwrap().lambda;
    assert!((l - TAU).abs() < 1e-6 * TAU);
}
