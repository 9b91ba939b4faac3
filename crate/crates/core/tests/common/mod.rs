//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use proptest::prelude::*;
use survowl::dataset::Treatment;
use survowl::rewards::WeightedClassificationProblem;
use survowl::svm::{KernelSpec, SvmFit};

/// Random weighted problem with `n` points in `d` dimensions.
pub fn problem_strategy(max_n: usize, d: usize) -> impl Strategy<Value = WeightedClassificationProblem> {
    (4..=max_n).prop_flat_map(move |n| {
        (
            prop::collection::vec(prop::collection::vec(-2.0f64..2.0, d), n),
            prop::collection::vec(any::<bool>(), n),
            prop::collection::vec(0.0f64..3.0, n),
        )
            .prop_map(|(features, signs, weights)| {
                let n = features.len();
                WeightedClassificationProblem {
                    features,
                    labels: signs.into_iter().map(|s| if s { Treatment::Plus } else { Treatment::Minus }).collect(),
                    weights,
                    propensities: vec![0.5; n],
                    offset: 0.0,
                }
            })
    })
}

pub fn kernel_strategy() -> impl Strategy<Value = KernelSpec> {
    prop_oneof![Just(KernelSpec::Linear), (0.3f64..3.0).prop_map(|h| KernelSpec::gaussian(h).unwrap())]
}

/// `½‖f‖² + Σ C_i hinge_i` for `f(x) = Σ α_j y_j K(x_j, x) + b`.
pub fn primal_at(
    problem: &WeightedClassificationProblem,
    kernel: &KernelSpec,
    upper: &[f64],
    alpha: &[f64],
    b: f64,
) -> f64 {
    let n = problem.len();
    let y: Vec<f64> = problem.labels.iter().map(|l| l.value()).collect();
    let k = |i: usize, j: usize| kernel.eval(&problem.features[i], &problem.features[j]);
    let f: Vec<f64> = (0..n).map(|i| (0..n).map(|j| alpha[j] * y[j] * k(j, i)).sum::<f64>() + b).collect();
    let norm2: f64 = (0..n).map(|i| (0..n).map(|j| alpha[i] * alpha[j] * y[i] * y[j] * k(i, j)).sum::<f64>()).sum();
    0.5 * norm2 + (0..n).map(|i| upper[i] * (1.0 - y[i] * f[i]).max(0.0)).sum::<f64>()
}

/// Relative gap between the primal at the returned rule and the dual objective.
pub fn relative_gap(problem: &WeightedClassificationProblem, kernel: &KernelSpec, fit: &SvmFit) -> f64 {
    let p = survowl::svm::primal_objective(problem, fit, kernel);
    (p - fit.dual_objective) / p.abs().max(fit.dual_objective.abs()).max(1e-12)
}

/// Two-sided Kolmogorov-Smirnov distance between draws and a CDF evaluated at the draws' support.
pub fn ks_distance(draws: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    draws.sort_by(f64::total_cmp);
    let n = draws.len() as f64;
    let mut d = 0.0f64;
    let mut i = 0;
    while i < draws.len() {
        let v = draws[i];
        let mut j = i;
        while j < draws.len() && draws[j] == v {
            j += 1;
        }
        let below = i as f64 / n;
        let upto = j as f64 / n;
        let f = cdf(v);
        let f_left = cdf(v - 1e-12 * v.abs().max(1.0));
        d = d.max((upto - f).abs()).max((below - f_left).abs());
        i = j;
    }
    d
}

/// KS critical value at level `alpha` for `n` draws (asymptotic).
pub fn ks_critical(alpha: f64, n: usize) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}
