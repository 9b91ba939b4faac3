//! Stratified k-fold selection of the penalty and kernel bandwidth.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::{gram, median_distance, Gram, KernelSpec};
use super::smo::{solve_dual_with, SolverParams};
use crate::dataset::Treatment;
use crate::error::{Error, Result};
use crate::rewards::WeightedClassificationProblem;
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum KernelFamily {
    Linear,
    /// Bandwidths are these multiples of the median pairwise distance.
    Gaussian {
        multipliers: Vec<f64>,
    },
    /// A single fixed bandwidth.
    GaussianFixed {
        bandwidth: f64,
    },
}

impl KernelFamily {
    pub fn gaussian() -> Self {
        KernelFamily::Gaussian { multipliers: vec![0.5, 1.0, 2.0] }
    }

    pub fn candidates(&self, features: &[Vec<f64>]) -> Result<Vec<KernelSpec>> {
        match self {
            KernelFamily::Linear => Ok(vec![KernelSpec::Linear]),
            KernelFamily::Gaussian { multipliers } => {
                if multipliers.is_empty() {
                    return Err(Error::Config("empty bandwidth multiplier list".into()));
                }
                let med = median_distance(features);
                multipliers.iter().map(|m| KernelSpec::gaussian(m * med)).collect()
            }
            KernelFamily::GaussianFixed { bandwidth } => Ok(vec![KernelSpec::gaussian(*bandwidth)?]),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            KernelFamily::Linear => "linear",
            _ => "gaussian",
        }
    }
}

/// `{2^k / n : k = -8, ..., 4}`.
pub fn lambda_grid(n: usize) -> Vec<f64> {
    (-8..=4).map(|k| 2f64.powi(k) / n as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvCell {
    pub lambda: f64,
    pub kernel: KernelSpec,
    /// Mean held-out value over the folds that were used.
    pub value: f64,
    pub folds_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub lambda: f64,
    pub kernel: KernelSpec,
    pub table: Vec<CvCell>,
}

/// Label-stratified fold labels in `0..folds`.
pub fn stratified_folds(labels: &[Treatment], folds: usize, rng: &mut Rng) -> Vec<usize> {
    let mut plus: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == Treatment::Plus).collect();
    let mut minus: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == Treatment::Minus).collect();
    plus.shuffle(rng);
    minus.shuffle(rng);
    let mut out = vec![0; labels.len()];
    for (pos, i) in plus.into_iter().chain(minus).enumerate() {
        out[i] = pos % folds;
    }
    out
}

pub fn cross_validate(
    problem: &WeightedClassificationProblem,
    family: &KernelFamily,
    lambda_grid: &[f64],
    folds: usize,
    params: &SolverParams,
    rng: &mut Rng,
) -> Result<CvResult> {
    if folds < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {folds}")));
    }
    if problem.len() < folds {
        return Err(Error::Domain(format!("{} samples for {folds} folds", problem.len())));
    }
    let assignment = stratified_folds(&problem.labels, folds, rng);
    cross_validate_with_folds(problem, family, lambda_grid, &assignment, params)
}

/// Held-out value `Σ W I{label = D(x)} / π / n_fold`.
fn held_out_value(problem: &WeightedClassificationProblem, rows: &[usize], decide: impl Fn(usize) -> Treatment) -> f64 {
    rows.iter()
        .filter(|&&i| decide(i) == problem.labels[i])
        .map(|&i| problem.weights[i] / problem.propensities[i])
        .sum::<f64>()
        / rows.len() as f64
}

/// As [`cross_validate`] with a caller-supplied fold label per sample.
pub fn cross_validate_with_folds(
    problem: &WeightedClassificationProblem,
    family: &KernelFamily,
    lambda_grid: &[f64],
    assignment: &[usize],
    params: &SolverParams,
) -> Result<CvResult> {
    if lambda_grid.is_empty() {
        return Err(Error::Config("empty lambda grid".into()));
    }
    if assignment.len() != problem.len() {
        return Err(Error::Domain("fold assignment length differs from problem".into()));
    }
    let folds = assignment.iter().max().map_or(0, |m| m + 1);
    let kernels = family.candidates(&problem.features)?;
    // Larger λ first: warm starts scale up, and ties keep the first (larger) λ.
    let mut order: Vec<usize> = (0..lambda_grid.len()).collect();
    order.sort_by(|&a, &b| lambda_grid[b].total_cmp(&lambda_grid[a]));

    let split: Vec<(Vec<usize>, Vec<usize>)> = (0..folds)
        .map(|f| {
            let train = (0..problem.len()).filter(|&i| assignment[i] != f).collect();
            let test = (0..problem.len()).filter(|&i| assignment[i] == f).collect();
            (train, test)
        })
        .collect();

    let mut table = Vec::new();
    for kernel in &kernels {
        let g: Gram = gram(kernel, &problem.features);
        // scores[fold][grid index]
        let scores: Vec<Option<Vec<f64>>> = split
            .par_iter()
            .enumerate()
            .map(|(f, (train, test))| fold_path(problem, kernel, &g, train, test, lambda_grid, &order, params, f))
            .collect::<Result<Vec<_>>>()?;
        let used: Vec<&Vec<f64>> = scores.iter().flatten().collect();
        if used.is_empty() {
            return Err(Error::Fit("every cross-validation fold was skipped".into()));
        }
        for (k, &lambda) in lambda_grid.iter().enumerate() {
            let value = used.iter().map(|s| s[k]).sum::<f64>() / used.len() as f64;
            table.push(CvCell { lambda, kernel: *kernel, value, folds_used: used.len() });
        }
    }

    let mut best: Option<&CvCell> = None;
    for kernel_block in table.chunks(lambda_grid.len()) {
        for &k in &order {
            let cell = &kernel_block[k];
            if best.is_none_or(|b| cell.value > b.value) {
                best = Some(cell);
            }
        }
    }
    let best = best.expect("nonempty table");
    log::debug!("event=cv_selected lambda={:.6e} kernel={} value={:.6}", best.lambda, best.kernel.name(), best.value);
    Ok(CvResult { lambda: best.lambda, kernel: best.kernel, table })
}

#[allow(clippy::too_many_arguments)]
fn fold_path(
    problem: &WeightedClassificationProblem,
    kernel: &KernelSpec,
    g: &Gram,
    train: &[usize],
    test: &[usize],
    lambda_grid: &[f64],
    order: &[usize],
    params: &SolverParams,
    fold: usize,
) -> Result<Option<Vec<f64>>> {
    let sub = problem.subset(train);
    let positive = |t: Treatment| (0..sub.len()).any(|i| sub.labels[i] == t && sub.weights[i] > 0.0);
    if !(positive(Treatment::Plus) && positive(Treatment::Minus)) || test.is_empty() {
        log::warn!("event=cv_fold_skipped fold={fold} reason=one_class");
        return Ok(None);
    }
    let entry = |i: usize, j: usize| g.get(train[i], train[j]);
    let mut scores = vec![0.0; lambda_grid.len()];
    let mut warm: Option<(f64, Vec<f64>)> = None;
    for &k in order {
        let lambda = lambda_grid[k];
        let start = warm.as_ref().map(|(prev, a)| a.iter().map(|v| v * prev / lambda).collect::<Vec<f64>>());
        let fit = solve_dual_with(&sub, lambda, kernel, params, &entry, start.as_deref())?;
        let rule = &fit.rule;
        scores[k] = held_out_value(problem, test, |i| rule.decide(&problem.features[i]));
        warm = Some((lambda, fit.alpha));
    }
    Ok(Some(scores))
}
