//! TOML run configuration.
//!
//! Every key has a default, unknown keys are rejected, and command-line
//! flags override file values. `--show-config` prints the merged result.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::Scale;
use crate::error::{Error, Result};
use crate::eval::{BenchmarkConfig, RealConfig};
use crate::forest::ForestParams;
use crate::pipeline::{parse_kernel, Method, PipelineConfig};
use crate::rist::RistParams;
use crate::svm::{KernelFamily, SolverParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub scale: Scale,
    pub rist: RistSection,
    pub svm: SvmSection,
    pub benchmark: BenchmarkSection,
    pub calibrate: CalibrateSection,
    pub evaluate: EvaluateSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RistSection {
    pub n_trees: usize,
    pub n_impute: usize,
    pub n_cycles: usize,
    pub min_leaf_events: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mtry: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmSection {
    /// `linear` and/or `gaussian`.
    pub kernels: Vec<String>,
    /// Gaussian bandwidths as multiples of the median pairwise distance.
    pub bandwidth_multipliers: Vec<f64>,
    /// A fixed Gaussian bandwidth; replaces the multiplier grid when set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<f64>,
    /// Explicit λ grid; `2^k / n` for `k = -8..4` when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_grid: Option<Vec<f64>>,
    pub folds: usize,
    pub kkt_tol: f64,
    pub max_passes: usize,
    pub cache_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkSection {
    pub scenarios: Vec<u8>,
    pub methods: Vec<String>,
    pub censor_rates: Vec<f64>,
    pub n_train: usize,
    pub n_test: usize,
    pub reps: usize,
    pub calibrate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrateSection {
    pub draws: usize,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateSection {
    pub folds: usize,
    pub repeats: usize,
    pub methods: Vec<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            scale: Scale::Log,
            rist: RistSection::default(),
            svm: SvmSection::default(),
            benchmark: BenchmarkSection::default(),
            calibrate: CalibrateSection::default(),
            evaluate: EvaluateSection::default(),
        }
    }
}

impl Default for RistSection {
    fn default() -> Self {
        let p = RistParams::default();
        Self {
            n_trees: p.n_trees,
            n_impute: p.n_impute,
            n_cycles: p.n_cycles,
            min_leaf_events: p.forest.min_leaf_events,
            mtry: p.forest.mtry,
        }
    }
}

impl Default for SvmSection {
    fn default() -> Self {
        let s = SolverParams::default();
        Self {
            kernels: vec!["linear".into(), "gaussian".into()],
            bandwidth_multipliers: vec![0.5, 1.0, 2.0],
            bandwidth: None,
            lambda_grid: None,
            folds: 10,
            kkt_tol: s.kkt_tol,
            max_passes: s.max_passes,
            cache_size: s.cache_size,
        }
    }
}

impl Default for BenchmarkSection {
    fn default() -> Self {
        let b = BenchmarkConfig::default();
        Self {
            scenarios: b.scenarios,
            methods: b.methods.iter().map(|m| m.name().to_string()).collect(),
            censor_rates: b.censor_rates,
            n_train: b.n_train,
            n_test: b.n_test,
            reps: b.reps,
            calibrate: b.calibrate,
        }
    }
}

impl Default for CalibrateSection {
    fn default() -> Self {
        let b = BenchmarkConfig::default();
        Self { draws: b.calibration_draws, tol: b.calibration_tol }
    }
}

impl Default for EvaluateSection {
    fn default() -> Self {
        let r = RealConfig::default();
        Self { folds: r.folds, repeats: r.repeats, methods: r.methods.iter().map(|m| m.name().to_string()).collect() }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Checks every key before any command runs.
    pub fn validate(&self) -> Result<()> {
        self.kernels()?;
        parse_methods(&self.benchmark.methods)?;
        parse_methods(&self.evaluate.methods)?;
        self.pipeline()?.solver.validate()?;
        let r = &self.rist;
        if r.n_trees == 0 || r.n_impute == 0 || r.n_cycles == 0 || !r.n_trees.is_multiple_of(r.n_impute) {
            return Err(Error::Config("rist: counts must be positive and n_impute must divide n_trees".into()));
        }
        if r.min_leaf_events == 0 || r.mtry == Some(0) {
            return Err(Error::Config("rist: min_leaf_events and mtry must be positive".into()));
        }
        if self.svm.folds < 2 {
            return Err(Error::Config("svm.folds must be at least 2".into()));
        }
        if let Some(grid) = &self.svm.lambda_grid {
            if grid.is_empty() || grid.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
                return Err(Error::Config("svm.lambda_grid must hold positive finite values".into()));
            }
        }
        if let Some(h) = self.svm.bandwidth {
            if !(h > 0.0) || !h.is_finite() {
                return Err(Error::Config("svm.bandwidth must be positive".into()));
            }
        }
        if self.svm.bandwidth_multipliers.is_empty() || self.svm.bandwidth_multipliers.iter().any(|m| !(*m > 0.0)) {
            return Err(Error::Config("svm.bandwidth_multipliers must be positive and nonempty".into()));
        }
        if self.calibrate.draws < 100 || !(self.calibrate.tol > 0.0) {
            return Err(Error::Config("calibrate: draws >= 100 and tol > 0 required".into()));
        }
        if self.evaluate.folds < 2 || self.evaluate.repeats == 0 {
            return Err(Error::Config("evaluate: folds >= 2 and repeats >= 1 required".into()));
        }
        self.benchmark_config()?.validate()
    }

    pub fn kernels(&self) -> Result<Vec<KernelFamily>> {
        self.svm
            .kernels
            .iter()
            .map(|k| {
                Ok(match parse_kernel(k)? {
                    KernelFamily::Linear => KernelFamily::Linear,
                    _ => match self.svm.bandwidth {
                        Some(bandwidth) => KernelFamily::GaussianFixed { bandwidth },
                        None => KernelFamily::Gaussian { multipliers: self.svm.bandwidth_multipliers.clone() },
                    },
                })
            })
            .collect()
    }

    pub fn pipeline(&self) -> Result<PipelineConfig> {
        let r = &self.rist;
        let forest = ForestParams { mtry: r.mtry, min_leaf_events: r.min_leaf_events, ..ForestParams::default() };
        Ok(PipelineConfig {
            rist: RistParams { n_trees: r.n_trees, n_impute: r.n_impute, n_cycles: r.n_cycles, forest, seed: 0 },
            solver: SolverParams {
                kkt_tol: self.svm.kkt_tol,
                max_passes: self.svm.max_passes,
                cache_size: self.svm.cache_size,
            },
            folds: self.svm.folds,
            lambda_grid: self.svm.lambda_grid.clone(),
            seed: self.seed,
        })
    }

    pub fn benchmark_config(&self) -> Result<BenchmarkConfig> {
        let b = &self.benchmark;
        Ok(BenchmarkConfig {
            scenarios: b.scenarios.clone(),
            methods: parse_methods(&b.methods)?,
            kernels: self.kernels()?,
            censor_rates: b.censor_rates.clone(),
            n_train: b.n_train,
            n_test: b.n_test,
            reps: b.reps,
            seed: self.seed,
            pipeline: self.pipeline()?,
            calibration_draws: self.calibrate.draws,
            calibration_tol: self.calibrate.tol,
            calibrate: b.calibrate,
        })
    }

    pub fn real_config(&self) -> Result<RealConfig> {
        Ok(RealConfig {
            folds: self.evaluate.folds,
            repeats: self.evaluate.repeats,
            methods: parse_methods(&self.evaluate.methods)?,
            kernels: self.kernels()?,
            pipeline: self.pipeline()?,
            seed: self.seed,
        })
    }
}

pub fn parse_methods(names: &[String]) -> Result<Vec<Method>> {
    if names.is_empty() {
        return Err(Error::Config("method list is empty".into()));
    }
    names.iter().map(|m| m.parse()).collect()
}
