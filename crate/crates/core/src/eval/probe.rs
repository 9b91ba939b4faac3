//! Empirical check that theoretical-mode forests approach the true cumulative hazard.

use rand::Rng as _;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Record, Scale, SurvivalDataset, Treatment};
use crate::error::{Error, Result};
use crate::forest::{fit_forest, ForestParams};
use crate::rng::{derive, substream, tag};
use crate::survival::StepFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Testbed {
    /// `Λ(t | x, a) = t exp(0.8 x₁ − 0.6 x₂ + 0.3 a)` on `x ∈ [0, 1]²`.
    Lipschitz,
    /// `Λ(t | x, a) = t`.
    Constant,
}

impl Testbed {
    pub fn rate(self, x: &[f64], a: Treatment) -> f64 {
        match self {
            Testbed::Lipschitz => (0.8 * x[0] - 0.6 * x[1] + 0.3 * a.value()).exp(),
            Testbed::Constant => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub testbed: Testbed,
    pub n_grid: Vec<usize>,
    pub reps: usize,
    pub n_trees: usize,
    pub n_query: usize,
    pub tau: f64,
    /// Rate of the exponential censoring time.
    pub censor_hazard: f64,
    /// Overrides `k_n = ⌈n^{d/(d+2)}⌉` when set.
    pub k_n: Option<usize>,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            testbed: Testbed::Lipschitz,
            n_grid: vec![500, 1000, 2000, 4000],
            reps: 20,
            n_trees: 20,
            n_query: 20,
            tau: 1.0,
            censor_hazard: 0.5,
            k_n: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub n: usize,
    pub k_n: usize,
    pub median_error: f64,
    /// Per replication: mean over query points of the sup-t error.
    pub errors: Vec<f64>,
}

/// `sup_{0 ≤ t < τ} |Λ̂(t) − rate·t|`, exact for a right-continuous step `Λ̂`.
pub fn sup_error(estimate: &StepFunction, rate: f64, tau: f64) -> f64 {
    let mut worst = 0.0f64;
    let mut left = 0.0;
    let mut level = estimate.baseline();
    for (&k, &v) in estimate.knots().iter().zip(estimate.values()) {
        if k >= tau {
            break;
        }
        worst = worst.max((level - rate * left).abs()).max((level - rate * k).abs());
        left = k;
        level = v;
    }
    worst.max((level - rate * left).abs()).max((level - rate * tau).abs())
}

fn probe_data(config: &ProbeConfig, n: usize, rep: usize) -> Result<SurvivalDataset> {
    let mut rng = substream(config.seed, &[tag::PROBE, n as u64, rep as u64]);
    let records = (0..n)
        .map(|_| {
            let x = vec![rng.random::<f64>(), rng.random::<f64>()];
            let a = if rng.random_bool(0.5) { Treatment::Plus } else { Treatment::Minus };
            let e: f64 = Exp1.sample(&mut rng);
            let t = e / config.testbed.rate(&x, a);
            let c = <Exp1 as Distribution<f64>>::sample(&Exp1, &mut rng) / config.censor_hazard;
            let y = t.min(c).min(config.tau).max(f64::MIN_POSITIVE);
            Record { covariates: x, treatment: a, time: y, event: t <= c && t <= config.tau, propensity: 0.5 }
        })
        .collect();
    SurvivalDataset::new(records, config.tau, Scale::Natural)
}

/// `⌈n^{d/(d+2)}⌉`.
pub fn balanced_k(n: usize, d: usize) -> usize {
    ((n as f64).powf(d as f64 / (d as f64 + 2.0)).ceil() as usize).max(1)
}

pub fn consistency_probe(config: &ProbeConfig) -> Result<Vec<ProbeRow>> {
    if config.reps == 0 || config.n_query == 0 || config.n_grid.is_empty() {
        return Err(Error::Config("probe needs reps, query points and an n grid".into()));
    }
    config
        .n_grid
        .iter()
        .map(|&n| {
            let k_n = config.k_n.unwrap_or_else(|| balanced_k(n, 2));
            let errors = (0..config.reps)
                .into_par_iter()
                .map(|rep| -> Result<f64> {
                    let data = probe_data(config, n, rep)?;
                    let params = ForestParams::theoretical(
                        config.n_trees,
                        k_n,
                        derive(config.seed, &[tag::PROBE, tag::FOREST, n as u64, rep as u64]),
                    );
                    let forest = fit_forest(&data, &params)?;
                    let mut q = substream(config.seed, &[tag::PROBE, tag::EVAL, rep as u64]);
                    let mut total = 0.0;
                    for _ in 0..config.n_query {
                        let x = [q.random::<f64>(), q.random::<f64>()];
                        let a = if q.random_bool(0.5) { Treatment::Plus } else { Treatment::Minus };
                        let est = forest.predict_hazard(&x, a)?;
                        total += sup_error(&est, config.testbed.rate(&x, a), config.tau);
                    }
                    Ok(total / config.n_query as f64)
                })
                .collect::<Result<Vec<f64>>>()?;
            let mut sorted = errors.clone();
            sorted.sort_by(f64::total_cmp);
            let m = sorted.len();
            let median = if m % 2 == 1 { sorted[m / 2] } else { 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]) };
            log::info!("event=probe_row n={n} k_n={k_n} median_error={median:.5}");
            Ok(ProbeRow { n, k_n, median_error: median, errors })
        })
        .collect()
}
