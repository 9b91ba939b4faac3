//! Recursively imputed survival trees.
//!
//! Cycle 0 fits a forest on the censored data. Each later cycle draws every
//! censored time from the current model's conditional residual-life law,
//! fits `n_trees / n_impute` trees on each of `n_impute` imputed copies and
//! pools them into the next model. The final model is the last pool.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Record, Scale, SurvivalDataset, Treatment};
use crate::error::{Error, Result};
use crate::forest::{fit_forest, ForestParams, SurvivalForest, SurvivalPredictor, TreeMode};
use crate::rng::{derive, substream, tag, Rng};
use crate::survival::{conditional_restricted_mean, restricted_mean, SurvivalCurve, SURVIVAL_FLOOR};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RistParams {
    pub n_trees: usize,
    pub n_impute: usize,
    pub n_cycles: usize,
    /// Tree settings; `n_trees` and `seed` here are overridden per cycle.
    pub forest: ForestParams,
    pub seed: u64,
}

impl Default for RistParams {
    fn default() -> Self {
        Self { n_trees: 50, n_impute: 1, n_cycles: 2, forest: ForestParams::default(), seed: 0 }
    }
}

impl RistParams {
    fn validate(&self) -> Result<()> {
        if self.n_trees == 0 || self.n_impute == 0 || self.n_cycles == 0 {
            return Err(Error::Config("RIST counts must all be at least 1".into()));
        }
        if !self.n_trees.is_multiple_of(self.n_impute) {
            return Err(Error::Config(format!("n_impute={} must divide n_trees={}", self.n_impute, self.n_trees)));
        }
        if self.forest.mode != TreeMode::Practical {
            return Err(Error::Config("RIST grows practical-mode trees".into()));
        }
        Ok(())
    }
}

/// Seed of the forest fitted on imputed copy `copy` during `cycle`.
///
/// Cycle 0 (the initial fit on censored data) uses copy 0.
pub fn forest_seed(seed: u64, cycle: usize, copy: usize) -> u64 {
    derive(seed, &[tag::RIST, tag::FOREST, cycle as u64, copy as u64])
}

fn impute_seed(seed: u64, cycle: usize, copy: usize) -> u64 {
    derive(seed, &[tag::RIST, tag::IMPUTE, cycle as u64, copy as u64])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleSummary {
    pub cycle: usize,
    pub trees: usize,
    /// Number of censored records replaced by draws.
    pub imputed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RistModel {
    final_forest: SurvivalForest,
    tau: f64,
    scale: Scale,
    cycles: Vec<CycleSummary>,
}

impl RistModel {
    pub fn forest(&self) -> &SurvivalForest {
        &self.final_forest
    }

    pub fn cycles(&self) -> &[CycleSummary] {
        &self.cycles
    }

    pub fn structure_hash(&self) -> String {
        self.final_forest.structure_hash()
    }
}

impl SurvivalPredictor for RistModel {
    fn predict_curve(&self, x: &[f64], a: Treatment) -> Result<SurvivalCurve> {
        self.final_forest.predict_curve(x, a)
    }

    fn tau(&self) -> f64 {
        self.tau
    }

    fn scale(&self) -> Scale {
        self.scale
    }
}

/// Inverse-CDF draw from `S(t)/S(c)` on `(c, tau]`.
///
/// Mass remaining at the horizon is returned as `tau`.
pub fn sample_conditional_time(s: &SurvivalCurve, c: f64, rng: &mut Rng) -> Result<f64> {
    let u: f64 = rng.random();
    sample_conditional_time_at(s, c, u)
}

/// Deterministic core of [`sample_conditional_time`] for a given uniform `u`.
pub fn sample_conditional_time_at(s: &SurvivalCurve, c: f64, u: f64) -> Result<f64> {
    let tau = s.tau();
    if c >= tau {
        log::debug!("event=degenerate_imputation c={c} tau={tau}");
        return Ok(tau);
    }
    let sc = s.eval(c);
    if sc <= SURVIVAL_FLOOR {
        return Err(Error::Numeric(format!("survival at censoring time {c} is at the floor")));
    }
    let step = s.step();
    let start = step.knots().partition_point(|&k| k <= c);
    for (&k, &v) in step.knots()[start..].iter().zip(&step.values()[start..]) {
        if k >= tau {
            break;
        }
        if v / sc <= u {
            return Ok(k);
        }
    }
    Ok(tau)
}

/// Replaces every censored record by an event at a conditional draw.
///
/// Record `i` uses stream `(seed, IMPUTE, i)`.
pub fn impute_dataset<P: SurvivalPredictor + ?Sized>(
    dataset: &SurvivalDataset,
    model: &P,
    seed: u64,
) -> Result<SurvivalDataset> {
    let records = dataset
        .records()
        .par_iter()
        .enumerate()
        .map(|(i, r)| {
            if r.event {
                return Ok(r.clone());
            }
            let curve = model.predict_curve(&r.covariates, r.treatment)?;
            let mut rng = substream(seed, &[tag::IMPUTE, i as u64]);
            let time = sample_conditional_time(&curve, r.time, &mut rng)?;
            Ok(Record { time, event: true, ..r.clone() })
        })
        .collect::<Result<Vec<_>>>()?;
    SurvivalDataset::new(records, dataset.tau(), dataset.scale())
}

pub fn fit_rist(dataset: &SurvivalDataset, params: &RistParams) -> Result<RistModel> {
    params.validate()?;
    let censored = dataset.records().iter().filter(|r| !r.event).count();
    let per_copy = params.n_trees / params.n_impute;

    let initial =
        ForestParams { n_trees: params.n_trees, seed: forest_seed(params.seed, 0, 0), ..params.forest.clone() };
    let mut model = fit_forest(dataset, &initial)?;
    let mut cycles = vec![CycleSummary { cycle: 0, trees: model.trees().len(), imputed: 0 }];

    for cycle in 1..=params.n_cycles {
        let parts = (0..params.n_impute)
            .map(|copy| {
                let imputed = impute_dataset(dataset, &model, impute_seed(params.seed, cycle, copy))?;
                let p = ForestParams {
                    n_trees: per_copy,
                    seed: forest_seed(params.seed, cycle, copy),
                    ..params.forest.clone()
                };
                fit_forest(&imputed, &p)
            })
            .collect::<Result<Vec<_>>>()?;
        model = SurvivalForest::pool(parts)?;
        cycles.push(CycleSummary { cycle, trees: model.trees().len(), imputed: censored });
    }

    Ok(RistModel { final_forest: model, tau: dataset.tau(), scale: dataset.scale(), cycles })
}

/// Restricted mean `E(min(T, tau) | x, a)` under a fitted model.
pub fn predict_expectation<P: SurvivalPredictor + ?Sized>(model: &P, x: &[f64], a: Treatment) -> Result<f64> {
    Ok(restricted_mean(&model.predict_curve(x, a)?))
}

/// `E(min(T, tau) | x, a, T > y)` under a fitted model.
pub fn predict_conditional_expectation<P: SurvivalPredictor + ?Sized>(
    model: &P,
    x: &[f64],
    a: Treatment,
    y: f64,
) -> Result<f64> {
    conditional_restricted_mean(&model.predict_curve(x, a)?, y)
}
