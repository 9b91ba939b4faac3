//! Properties of the hazard, survival and restricted-mean estimators.

mod common;

use proptest::prelude::*;
use survowl::eval::sup_error;
use survowl::rist::{sample_conditional_time, sample_conditional_time_at};
use survowl::rng::substream;
use survowl::survival::{
    conditional_restricted_mean, hazard_to_survival, nelson_aalen, restricted_mean, StepFunction, SurvivalCurve,
};

fn sample() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    (1usize..60).prop_flat_map(|n| (prop::collection::vec(0.01f64..10.0, n), prop::collection::vec(any::<bool>(), n)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn hazard_is_nondecreasing_with_jumps_at_events((times, events) in sample()) {
        let h = nelson_aalen(&times, &events).unwrap();
        prop_assert!(h.is_nondecreasing());
        prop_assert_eq!(h.baseline(), 0.0);
        for &k in h.knots() {
            prop_assert!(times.iter().zip(&events).any(|(&t, &e)| e && t == k));
        }
        if events.iter().all(|e| !e) {
            prop_assert!(h.is_empty());
            prop_assert_eq!(h.eval(1e9), 0.0);
        }
    }

    #[test]
    fn survival_is_a_valid_curve((times, events) in sample()) {
        let tau = times.iter().cloned().fold(0.0, f64::max) + 1.0;
        let s = hazard_to_survival(&nelson_aalen(&times, &events).unwrap(), tau).unwrap();
        prop_assert_eq!(s.eval(0.0), 1.0);
        let mut prev = 1.0;
        for k in 0..=200 {
            let v = s.eval(tau * k as f64 / 200.0);
            prop_assert!(v > 0.0 && v <= 1.0 && v <= prev);
            prev = v;
        }
    }

    #[test]
    fn restricted_means_stay_in_range((times, events) in sample(), y_frac in 0.0f64..1.0, dy in 0.0f64..1.0) {
        let tau = times.iter().cloned().fold(0.0, f64::max) + 1.0;
        let s = hazard_to_survival(&nelson_aalen(&times, &events).unwrap(), tau).unwrap();
        let m = restricted_mean(&s);
        prop_assert!((0.0..=tau).contains(&m));
        let all_censored = events.iter().all(|e| !e);
        prop_assert_eq!(m == tau, all_censored);
        let y1 = y_frac * tau * 0.999;
        let y2 = (y1 + dy * (tau - y1)).min(tau * 0.999);
        if let (Ok(c1), Ok(c2)) = (conditional_restricted_mean(&s, y1), conditional_restricted_mean(&s, y2)) {
            prop_assert!(c1 >= y1 - 1e-12 && c1 <= tau + 1e-12);
            prop_assert!(c2 >= c1 - 1e-10, "{} then {}", c1, c2);
        }
    }
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|k| if k % 2 == 1 { 4.0 } else { 2.0 } * f(a + k as f64 * h)).sum();
    h / 3.0 * (f(a) + inner + f(b))
}

#[test]
fn discretized_exponential_restricted_mean() {
    let grid: Vec<f64> = (1..=10_000).map(|k| 5.0 * k as f64 / 10_000.0).collect();
    let values: Vec<f64> = grid.iter().map(|t| (-t).exp()).collect();
    let s = SurvivalCurve::new(StepFunction::new(grid, values, 1.0).unwrap(), 5.0).unwrap();
    let oracle = simpson(|t| (-t).exp(), 0.0, 5.0, 2000);
    assert!((oracle - (1.0 - (-5.0f64).exp())).abs() < 1e-10);
    assert!((restricted_mean(&s) - oracle).abs() < 1e-3);
}

#[test]
fn hazard_error_shrinks_with_sample_size() {
    let median_error = |n: usize| {
        let mut errs: Vec<f64> = (0..20)
            .map(|seed| {
                let mut rng = substream(seed, &[n as u64]);
                let times: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
                let h = nelson_aalen(&times, &vec![true; n]).unwrap();
                sup_error(&h, 1.0, 3.0)
            })
            .collect();
        errs.sort_by(f64::total_cmp);
        0.5 * (errs[9] + errs[10])
    };
    let (small, large) = (median_error(1_000), median_error(10_000));
    assert!(large < small, "{large} vs {small}");
}

fn two_step() -> SurvivalCurve {
    SurvivalCurve::new(StepFunction::new(vec![1.0, 2.0, 3.0], vec![0.6, 0.3, 0.1], 1.0).unwrap(), 4.0).unwrap()
}

#[test]
fn conditional_draws_match_exact_cdf() {
    let s = two_step();
    let c = 0.5;
    let mut rng = substream(17, &[1]);
    let mut draws: Vec<f64> = (0..10_000).map(|_| sample_conditional_time(&s, c, &mut rng).unwrap()).collect();
    // mass 1 − S(t)/S(c) below t; the remainder sits at tau
    let cdf = |t: f64| if t >= 4.0 { 1.0 } else { 1.0 - s.eval(t) / s.eval(c) };
    let d = common::ks_distance(&mut draws, cdf);
    assert!(d < common::ks_critical(1e-3, 10_000), "KS distance {d}");
}

#[test]
fn conditional_draw_mean_matches_integral() {
    let s = two_step();
    let c = 1.5;
    let mut rng = substream(3, &[2]);
    let draws: Vec<f64> = (0..100_000).map(|_| sample_conditional_time(&s, c, &mut rng).unwrap()).collect();
    let n = draws.len() as f64;
    let mean = draws.iter().sum::<f64>() / n;
    let sd = (draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let exact = conditional_restricted_mean(&s, c).unwrap();
    assert!((mean - exact).abs() < 3.0 * sd / n.sqrt(), "{mean} vs {exact}");
}

#[test]
fn draws_never_precede_censoring_time() {
    let s = two_step();
    for k in 0..100 {
        let u = k as f64 / 100.0;
        for c in [0.0, 0.5, 1.0, 2.5, 3.9] {
            let t = sample_conditional_time_at(&s, c, u).unwrap();
            assert!(t > c && t <= 4.0);
        }
    }
}
