//! Weighted support-vector classification for treatment rules.

mod cv;
mod kernel;
mod rule;
mod smo;

pub use cv::{
    cross_validate, cross_validate_with_folds, lambda_grid, stratified_folds, CvCell, CvResult, KernelFamily,
};
pub use kernel::{gram, median_distance, Gram, KernelSpec};
pub use rule::{Policy, TreatmentRule};
pub use smo::{box_bounds, dual_objective, primal_objective, solve_dual, SolverParams, SvmFit};

use crate::error::Result;
use crate::rewards::WeightedClassificationProblem;
use crate::rng::Rng;

/// Cross-validates over `family` and `lambda_grid`, then refits on all of `problem`.
pub fn fit_with_cv(
    problem: &WeightedClassificationProblem,
    family: &KernelFamily,
    lambda_grid: &[f64],
    folds: usize,
    params: &SolverParams,
    rng: &mut Rng,
) -> Result<(SvmFit, CvResult)> {
    let cv = cross_validate(problem, family, lambda_grid, folds, params, rng)?;
    let fit = solve_dual(problem, cv.lambda, &cv.kernel, params)?;
    Ok((fit, cv))
}
