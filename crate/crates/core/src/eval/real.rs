//! Repeated k-fold protocol for a single observed dataset.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{matched_value, mean_sd, restricted_mean_measure};
use crate::dataset::SurvivalDataset;
use crate::error::{Error, Result};
use crate::pipeline::{fit_methods, Method, PipelineConfig};
use crate::rist::fit_rist;
use crate::rng::{derive, substream, tag};
use crate::svm::KernelFamily;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealConfig {
    pub folds: usize,
    pub repeats: usize,
    pub methods: Vec<Method>,
    pub kernels: Vec<KernelFamily>,
    pub pipeline: PipelineConfig,
    pub seed: u64,
}

impl Default for RealConfig {
    fn default() -> Self {
        Self {
            folds: 4,
            repeats: 100,
            methods: vec![Method::RistR1, Method::RistR2, Method::Ico, Method::Cox],
            kernels: vec![KernelFamily::Linear, KernelFamily::gaussian()],
            pipeline: PipelineConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealRow {
    pub method: Method,
    pub kernel: String,
    /// Fold-averaged matched value per repeat; `None` when every fold was skipped.
    pub repeat_values: Vec<Option<f64>>,
    pub mean: f64,
    pub sd: f64,
    pub skipped_folds: usize,
}

/// Each repeat splits the records at random into `folds` near-equal parts and
/// holds each out once. Held-out records are scored by the matched value of
/// `δY + (1 − δ)E(T)` rewards from a RIST fitted on the whole dataset.
pub fn crossvalidated_real(dataset: &SurvivalDataset, config: &RealConfig) -> Result<Vec<RealRow>> {
    if config.folds < 2 || dataset.len() < 4 * config.folds {
        return Err(Error::Domain(format!("{} records are too few for {} folds", dataset.len(), config.folds)));
    }
    if config.repeats == 0 || config.methods.is_empty() {
        return Err(Error::Config("need at least one repeat and one method".into()));
    }
    let eval_params =
        crate::rist::RistParams { seed: derive(config.seed, &[tag::EVAL]), ..config.pipeline.rist.clone() };
    let eval_model = fit_rist(dataset, &eval_params)?;
    let rewards = restricted_mean_measure(dataset, &eval_model)?;

    let labels = fit_methods_labels(config);
    // per repeat: per (method, kernel): (fold sum, used folds, skipped folds)
    let per_repeat: Vec<Vec<(f64, usize, usize)>> = (0..config.repeats)
        .into_par_iter()
        .map(|rep| -> Result<Vec<(f64, usize, usize)>> {
            let mut order: Vec<usize> = (0..dataset.len()).collect();
            order.shuffle(&mut substream(config.seed, &[tag::FOLDS, rep as u64]));
            let mut acc = vec![(0.0, 0usize, 0usize); labels.len()];
            for fold in 0..config.folds {
                let test: Vec<usize> =
                    order.iter().enumerate().filter(|(p, _)| p % config.folds == fold).map(|(_, &i)| i).collect();
                let mut train: Vec<usize> =
                    order.iter().enumerate().filter(|(p, _)| p % config.folds != fold).map(|(_, &i)| i).collect();
                train.sort_unstable();
                let train_ds = dataset.subset(&train)?;
                let test_ds = dataset.subset(&test)?;
                let test_rewards: Vec<f64> = test.iter().map(|&i| rewards[i]).collect();
                let pipeline = PipelineConfig {
                    seed: derive(config.seed, &[tag::REPLICATION, rep as u64, fold as u64]),
                    ..config.pipeline.clone()
                };
                let fits = fit_methods(&train_ds, &config.methods, &config.kernels, &pipeline);
                for (k, (_, _, fit)) in fits.into_iter().enumerate() {
                    let scored = fit.and_then(|rule| matched_value(&rule, &test_ds, &test_rewards));
                    match scored {
                        Ok(v) => {
                            acc[k].0 += v;
                            acc[k].1 += 1;
                        }
                        Err(e) => {
                            log::warn!(
                                "event=fold_skipped repeat={rep} fold={fold} method={} kernel={} error=\"{e}\"",
                                labels[k].0,
                                labels[k].1
                            );
                            acc[k].2 += 1;
                        }
                    }
                }
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(labels
        .iter()
        .enumerate()
        .map(|(k, (method, kernel))| {
            let repeat_values: Vec<Option<f64>> =
                per_repeat.iter().map(|r| if r[k].1 > 0 { Some(r[k].0 / r[k].1 as f64) } else { None }).collect();
            let present: Vec<f64> = repeat_values.iter().flatten().copied().collect();
            let (mean, sd) = mean_sd(&present);
            RealRow {
                method: *method,
                kernel: kernel.clone(),
                skipped_folds: per_repeat.iter().map(|r| r[k].2).sum(),
                repeat_values,
                mean,
                sd,
            }
        })
        .collect())
}

fn fit_methods_labels(config: &RealConfig) -> Vec<(Method, String)> {
    crate::pipeline::method_kernel_pairs(&config.methods, &config.kernels)
        .into_iter()
        .map(|(m, k)| (m, if m.uses_kernel() { k.name().to_string() } else { "none".to_string() }))
        .collect()
}
