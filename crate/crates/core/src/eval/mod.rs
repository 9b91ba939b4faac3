//! Value estimates, benchmark runner and evaluation protocols.

mod benchmark;
mod probe;
mod real;

pub use benchmark::{
    run_benchmark, summary_rows, write_long_csv, write_summary_csv, BenchmarkConfig, BenchmarkResult, BenchmarkRun,
    ReplicationRecord,
};
pub use probe::{consistency_probe, sup_error, ProbeConfig, ProbeRow, Testbed};
pub use real::{crossvalidated_real, RealConfig, RealRow};

use rayon::prelude::*;

use crate::dataset::{SurvivalDataset, Treatment};
use crate::error::{Error, Result};
use crate::forest::SurvivalPredictor;
use crate::rist::predict_expectation;
use crate::sim::Simulated;
use crate::svm::Policy;

/// Arm chosen by `policy` for every test record.
pub fn selected_arms<P: Policy + ?Sized>(policy: &P, sim: &Simulated) -> Vec<Treatment> {
    sim.dataset.records().par_iter().map(|r| policy.decide(&r.covariates)).collect()
}

/// Mean of `log min(T̃, τ)` over the sample with each record's arm set by `policy`.
pub fn empirical_value<P: Policy + ?Sized>(policy: &P, sim: &Simulated) -> Result<f64> {
    if sim.truth.len() != sim.dataset.len() || sim.truth.is_empty() {
        return Err(Error::Undefined("test data has no matching truth sidecar".into()));
    }
    let arms = selected_arms(policy, sim);
    let total: f64 = arms.iter().enumerate().map(|(i, &a)| sim.truth.potential_time(i, a).ln()).sum();
    Ok(total / sim.dataset.len() as f64)
}

/// `Σ R_i I{A_i = D(X_i)} / Σ I{A_i = D(X_i)}`.
pub fn matched_value<P: Policy + ?Sized>(policy: &P, dataset: &SurvivalDataset, rewards: &[f64]) -> Result<f64> {
    if rewards.len() != dataset.len() {
        return Err(Error::Domain(format!("{} rewards for {} records", rewards.len(), dataset.len())));
    }
    let (sum, count) = dataset
        .records()
        .iter()
        .zip(rewards)
        .filter(|(r, _)| policy.decide(&r.covariates) == r.treatment)
        .fold((0.0, 0usize), |(s, c), (_, &w)| (s + w, c + 1));
    if count == 0 {
        return Err(Error::Undefined("no record received its recommended treatment".into()));
    }
    Ok(sum / count as f64)
}

/// `δ_i Y_i + (1 − δ_i) E(T | X_i, A_i)` under `model`.
pub fn restricted_mean_measure<P: SurvivalPredictor + ?Sized>(
    dataset: &SurvivalDataset,
    model: &P,
) -> Result<Vec<f64>> {
    if model.scale() != dataset.scale() {
        return Err(Error::Config("model and dataset scales differ".into()));
    }
    dataset
        .records()
        .par_iter()
        .map(|r| if r.event { Ok(r.time) } else { predict_expectation(model, &r.covariates, r.treatment) })
        .collect()
}

/// Sample mean and standard deviation (`n − 1` denominator; 0 for one value).
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
