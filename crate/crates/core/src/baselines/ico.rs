use serde::{Deserialize, Serialize};

use super::cox::{censoring_survival, CoxModel};
use crate::dataset::SurvivalDataset;
use crate::error::Result;

pub const ICO_FLOOR: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IcoWeights {
    pub weights: Vec<f64>,
    /// Events whose censoring survival was raised to the floor.
    pub floored: usize,
}

/// `δ Y / max(Ŝ_C(Y | X, A), 0.05)`; censored records get 0.
///
/// `Y` is the dataset's own time, so log-scale data gives log-time numerators.
pub fn ico_weights(dataset: &SurvivalDataset, censor_model: &CoxModel) -> Result<IcoWeights> {
    let mut floored = 0;
    let mut weights = Vec::with_capacity(dataset.len());
    for r in dataset.records() {
        if !r.event {
            weights.push(0.0);
            continue;
        }
        weights.push(r.time / ico_denominator(censor_model, r, &mut floored)?);
    }
    if floored > 0 {
        log::info!("event=ico_floor floored={floored} n={}", dataset.len());
    }
    Ok(IcoWeights { weights, floored })
}

fn ico_denominator(model: &CoxModel, r: &crate::dataset::Record, floored: &mut usize) -> Result<f64> {
    let s = censoring_survival(model, &r.covariates, r.treatment, r.time)?;
    if s < ICO_FLOOR {
        *floored += 1;
        Ok(ICO_FLOOR)
    } else {
        Ok(s)
    }
}
