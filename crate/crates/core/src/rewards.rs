//! Outcome weights for the weighted classification step.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{SurvivalDataset, Treatment};
use crate::error::{Error, Result};
use crate::forest::SurvivalPredictor;
use crate::rist::{predict_conditional_expectation, predict_expectation};

fn check_compatible<P: SurvivalPredictor + ?Sized>(model: &P, dataset: &SurvivalDataset) -> Result<()> {
    if model.scale() != dataset.scale() {
        return Err(Error::Config(format!(
            "model is on the {} scale but the dataset is on the {} scale",
            model.scale(),
            dataset.scale()
        )));
    }
    if (model.tau() - dataset.tau()).abs() > 1e-12 * dataset.tau().abs().max(1.0) {
        return Err(Error::Config(format!(
            "model horizon {} differs from dataset horizon {}",
            model.tau(),
            dataset.tau()
        )));
    }
    Ok(())
}

/// `W_i = E(T | X_i, A_i)` for every record.
pub fn reward_r1<P: SurvivalPredictor + ?Sized>(model: &P, dataset: &SurvivalDataset) -> Result<Vec<f64>> {
    check_compatible(model, dataset)?;
    dataset.records().par_iter().map(|r| predict_expectation(model, &r.covariates, r.treatment)).collect()
}

/// `W_i = Y_i` for events, `E(T | X_i, A_i, T > Y_i)` for censored records.
pub fn reward_r2<P: SurvivalPredictor + ?Sized>(model: &P, dataset: &SurvivalDataset) -> Result<Vec<f64>> {
    check_compatible(model, dataset)?;
    dataset
        .records()
        .par_iter()
        .map(|r| {
            if r.event {
                Ok(r.time)
            } else {
                predict_conditional_expectation(model, &r.covariates, r.treatment, r.time)
            }
        })
        .collect()
}

/// Weighted binary classification instance.
///
/// Negative raw weights are stored as the flipped label with `|W|`, since
/// `W I{A != D} = |W| I{-A != D} + W` for `W < 0`. The dropped constant
/// `sum min(W_i, 0)` is kept in `offset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedClassificationProblem {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<Treatment>,
    pub weights: Vec<f64>,
    pub propensities: Vec<f64>,
    pub offset: f64,
}

impl WeightedClassificationProblem {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn subset(&self, rows: &[usize]) -> Self {
        Self {
            features: rows.iter().map(|&i| self.features[i].clone()).collect(),
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
            weights: rows.iter().map(|&i| self.weights[i]).collect(),
            propensities: rows.iter().map(|&i| self.propensities[i]).collect(),
            offset: 0.0,
        }
    }

    /// `sum_i W_i I{label_i != D(x_i)} / pi_i`. Differs from the signed-weight
    /// risk by a constant that does not depend on `D`.
    pub fn weighted_risk(&self, decide: impl Fn(&[f64]) -> Treatment) -> f64 {
        self.features
            .iter()
            .zip(&self.labels)
            .zip(self.weights.iter().zip(&self.propensities))
            .filter(|((x, &l), _)| decide(x) != l)
            .map(|(_, (&w, &p))| w / p)
            .sum::<f64>()
    }
}

pub fn build_problem(dataset: &SurvivalDataset, raw_weights: &[f64]) -> Result<WeightedClassificationProblem> {
    if raw_weights.len() != dataset.len() {
        return Err(Error::Domain(format!("{} weights for {} records", raw_weights.len(), dataset.len())));
    }
    let mut p = WeightedClassificationProblem {
        features: Vec::with_capacity(dataset.len()),
        labels: Vec::with_capacity(dataset.len()),
        weights: Vec::with_capacity(dataset.len()),
        propensities: Vec::with_capacity(dataset.len()),
        offset: 0.0,
    };
    for (i, (r, &w)) in dataset.records().iter().zip(raw_weights).enumerate() {
        if !w.is_finite() {
            return Err(Error::Numeric(format!("weight {i} is not finite")));
        }
        p.features.push(r.covariates.clone());
        p.propensities.push(r.propensity);
        if w >= 0.0 {
            p.labels.push(r.treatment);
            p.weights.push(w);
        } else {
            p.labels.push(r.treatment.flip());
            p.weights.push(-w);
            p.offset += w;
        }
    }
    Ok(p)
}
