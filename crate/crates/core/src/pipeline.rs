//! End-to-end rule fitting: rewards, weighted classification, rule.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines::{cox_itr, fit_cox, ico_weights, CoxRule, Target};
use crate::dataset::{Scale, SurvivalDataset, Treatment};
use crate::error::{Error, Result};
use crate::rewards::{build_problem, reward_r1, reward_r2, WeightedClassificationProblem};
use crate::rist::{fit_rist, RistModel, RistParams};
use crate::rng::{derive, substream, tag};
use crate::svm::{
    cross_validate, lambda_grid, solve_dual, CvResult, KernelFamily, Policy, SolverParams, TreatmentRule,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "ORACLE_T")]
    OracleT,
    #[serde(rename = "RIST_R1")]
    RistR1,
    #[serde(rename = "RIST_R2")]
    RistR2,
    #[serde(rename = "ICO")]
    Ico,
    #[serde(rename = "COX")]
    Cox,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::OracleT, Method::RistR1, Method::RistR2, Method::Ico, Method::Cox];

    pub fn name(self) -> &'static str {
        match self {
            Method::OracleT => "ORACLE_T",
            Method::RistR1 => "RIST_R1",
            Method::RistR2 => "RIST_R2",
            Method::Ico => "ICO",
            Method::Cox => "COX",
        }
    }

    pub fn code(self) -> u64 {
        self as u64
    }

    pub fn uses_kernel(self) -> bool {
        self != Method::Cox
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "ORACLE_T" => Ok(Method::OracleT),
            "RIST_R1" => Ok(Method::RistR1),
            "RIST_R2" => Ok(Method::RistR2),
            "ICO" => Ok(Method::Ico),
            "COX" => Ok(Method::Cox),
            _ => Err(Error::Config(format!("unknown method `{s}`"))),
        }
    }
}

/// Parses `linear` or `gaussian`.
pub fn parse_kernel(s: &str) -> Result<KernelFamily> {
    match s.to_ascii_lowercase().as_str() {
        "linear" => Ok(KernelFamily::Linear),
        "gaussian" | "rbf" => Ok(KernelFamily::gaussian()),
        _ => Err(Error::Config(format!("unknown kernel `{s}`"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub rist: RistParams,
    pub solver: SolverParams,
    pub folds: usize,
    /// Defaults to `{2^k / n : k = -8..4}`.
    pub lambda_grid: Option<Vec<f64>>,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self { rist: RistParams::default(), solver: SolverParams::default(), folds: 10, lambda_grid: None, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FittedRule {
    Svm { rule: TreatmentRule },
    Cox { rule: CoxRule },
}

impl Policy for FittedRule {
    fn decide(&self, x: &[f64]) -> Treatment {
        match self {
            FittedRule::Svm { rule } => rule.decide(x),
            FittedRule::Cox { rule } => rule.decide(x),
        }
    }
}

/// Serialized output of `fit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub method: Method,
    pub scale: Scale,
    pub dim: usize,
    pub tau: f64,
    pub rule: FittedRule,
    pub lambda: Option<f64>,
    pub cv: Option<CvResult>,
}

impl ModelFile {
    pub const FORMAT: &'static str = "survowl-rule";

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: ModelFile = serde_json::from_str(text)?;
        if m.format != Self::FORMAT {
            return Err(Error::Config(format!("not a rule file (format `{}`)", m.format)));
        }
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn decide(&self, x: &[f64]) -> Result<Treatment> {
        if x.len() != self.dim {
            return Err(Error::Domain(format!("rule expects {} covariates, got {}", self.dim, x.len())));
        }
        Ok(self.rule.decide(x))
    }
}

/// Stage of the pipeline an error came from.
fn staged<T>(stage: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| {
        log::error!("event=stage_failed stage={stage} error=\"{e}\"");
        e
    })
}

/// RIST model with the seed derivation used by [`fit_itr`].
pub fn fit_reward_model(dataset: &SurvivalDataset, config: &PipelineConfig) -> Result<RistModel> {
    let params = RistParams { seed: derive(config.seed, &[tag::RIST]), ..config.rist.clone() };
    fit_rist(dataset, &params)
}

/// Raw (signed) weights of a kernel method.
pub fn method_weights(method: Method, dataset: &SurvivalDataset, rist: Option<&RistModel>) -> Result<Vec<f64>> {
    match method {
        Method::RistR1 | Method::RistR2 => {
            let model = rist.ok_or_else(|| Error::Config(format!("{method} needs a RIST model")))?;
            if method == Method::RistR1 {
                reward_r1(model, dataset)
            } else {
                reward_r2(model, dataset)
            }
        }
        Method::Ico => {
            let censor = fit_cox(dataset, Target::Censoring)?;
            Ok(ico_weights(dataset, &censor)?.weights)
        }
        Method::OracleT => Err(Error::Config("ORACLE_T weights come from the true failure times".into())),
        Method::Cox => Err(Error::Config("COX does not use weights".into())),
    }
}

/// Cross-validated weighted SVM on a prepared problem.
pub fn fit_weighted(
    problem: &WeightedClassificationProblem,
    family: &KernelFamily,
    config: &PipelineConfig,
    stream: &[u64],
) -> Result<(TreatmentRule, CvResult)> {
    let grid = config.lambda_grid.clone().unwrap_or_else(|| lambda_grid(problem.len()));
    let mut labels = vec![tag::FOLDS];
    labels.extend_from_slice(stream);
    let mut rng = substream(config.seed, &labels);
    let cv = cross_validate(problem, family, &grid, config.folds, &config.solver, &mut rng)?;
    let fit = solve_dual(problem, cv.lambda, &cv.kernel, &config.solver)?;
    Ok((fit.rule, cv))
}

fn family_code(family: &KernelFamily) -> u64 {
    match family {
        KernelFamily::Linear => 0,
        _ => 1,
    }
}

/// Fits one of `RIST_R1`, `RIST_R2`, `ICO`, `COX` on `dataset` as given.
pub fn fit_itr(
    dataset: &SurvivalDataset,
    method: Method,
    family: &KernelFamily,
    config: &PipelineConfig,
) -> Result<ModelFile> {
    fit_itr_with_weights(dataset, method, family, config).map(|(m, _)| m)
}

/// As [`fit_itr`], also returning the raw signed weights of kernel methods.
pub fn fit_itr_with_weights(
    dataset: &SurvivalDataset,
    method: Method,
    family: &KernelFamily,
    config: &PipelineConfig,
) -> Result<(ModelFile, Option<Vec<f64>>)> {
    let base = ModelFile {
        format: ModelFile::FORMAT.into(),
        version: 1,
        method,
        scale: dataset.scale(),
        dim: dataset.dim(),
        tau: dataset.tau(),
        rule: FittedRule::Cox { rule: CoxRule { beta_a: 0.0, beta_ax: vec![] } },
        lambda: None,
        cv: None,
    };
    match method {
        Method::Cox => {
            if *family != KernelFamily::Linear {
                log::warn!("event=kernel_ignored method=COX kernel={}", family.name());
            }
            let model = staged("cox", fit_cox(dataset, Target::Failure))?;
            let model = ModelFile { rule: FittedRule::Cox { rule: cox_itr(&model)? }, ..base };
            Ok((model, None))
        }
        Method::OracleT => {
            Err(Error::Config("ORACLE_T needs true failure times and is only available in benchmarks".into()))
        }
        _ => {
            let rist = match method {
                Method::RistR1 | Method::RistR2 => Some(staged("rist", fit_reward_model(dataset, config))?),
                _ => None,
            };
            let w = staged("rewards", method_weights(method, dataset, rist.as_ref()))?;
            let problem = build_problem(dataset, &w)?;
            let (rule, cv) = staged("svm", fit_weighted(&problem, family, config, &stream_for(method, family)))?;
            let model = ModelFile { lambda: Some(rule.lambda()), rule: FittedRule::Svm { rule }, cv: Some(cv), ..base };
            Ok((model, Some(w)))
        }
    }
}

/// `(method, kernel)` pairs in output order; COX appears once.
pub fn method_kernel_pairs(methods: &[Method], kernels: &[KernelFamily]) -> Vec<(Method, KernelFamily)> {
    let mut out = Vec::new();
    for &m in methods {
        if m.uses_kernel() {
            out.extend(kernels.iter().map(|k| (m, k.clone())));
        } else {
            out.push((m, KernelFamily::Linear));
        }
    }
    out
}

/// Fits every method/kernel pair on one dataset, sharing the RIST fit and ICO weights.
pub fn fit_methods(
    dataset: &SurvivalDataset,
    methods: &[Method],
    kernels: &[KernelFamily],
    config: &PipelineConfig,
) -> Vec<(Method, KernelFamily, Result<FittedRule>)> {
    let needs_rist = methods.iter().any(|m| matches!(m, Method::RistR1 | Method::RistR2));
    let rist = if needs_rist { Some(fit_reward_model(dataset, config)) } else { None };
    let mut problems: Vec<(Method, Result<WeightedClassificationProblem>)> = Vec::new();
    let mut out = Vec::new();
    for (method, family) in method_kernel_pairs(methods, kernels) {
        let fit = match method {
            Method::Cox => {
                fit_cox(dataset, Target::Failure).and_then(|m| cox_itr(&m)).map(|rule| FittedRule::Cox { rule })
            }
            Method::OracleT => Err(Error::Config("ORACLE_T is only available in benchmarks".into())),
            _ => {
                if !problems.iter().any(|(m, _)| *m == method) {
                    let w = match &rist {
                        Some(Ok(model)) => method_weights(method, dataset, Some(model)),
                        Some(Err(e)) if method != Method::Ico => Err(Error::Fit(format!("rist: {e}"))),
                        _ => method_weights(method, dataset, None),
                    };
                    problems.push((method, w.and_then(|w| build_problem(dataset, &w))));
                }
                let problem = &problems.iter().find(|(m, _)| *m == method).expect("just inserted").1;
                match problem {
                    Ok(p) => fit_weighted(p, &family, config, &stream_for(method, &family))
                        .map(|(rule, _)| FittedRule::Svm { rule }),
                    Err(e) => Err(Error::Fit(e.to_string())),
                }
            }
        };
        out.push((method, family, fit));
    }
    out
}

pub(crate) fn stream_for(method: Method, family: &KernelFamily) -> [u64; 2] {
    [method.code(), family_code(family)]
}
