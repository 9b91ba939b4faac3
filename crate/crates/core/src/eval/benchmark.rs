//! Monte Carlo benchmark over scenarios, methods, kernels and censoring rates.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{empirical_value, mean_sd};
use crate::baselines::{cox_itr, fit_cox, Target};
use crate::error::{Error, Result};
use crate::pipeline::{fit_reward_model, fit_weighted, method_weights, stream_for, Method, PipelineConfig};
use crate::rewards::build_problem;
use crate::rng::{derive, tag};
use crate::sim::{calibrate_censoring, generate, ScenarioSpec};
use crate::svm::KernelFamily;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub scenarios: Vec<u8>,
    pub methods: Vec<Method>,
    pub kernels: Vec<KernelFamily>,
    /// Target censoring rates; the intercept is calibrated for each.
    pub censor_rates: Vec<f64>,
    pub n_train: usize,
    pub n_test: usize,
    pub reps: usize,
    pub seed: u64,
    pub pipeline: PipelineConfig,
    pub calibration_draws: usize,
    pub calibration_tol: f64,
    /// When false the built-in intercepts are used and `censor_rates` is ignored.
    pub calibrate: bool,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            scenarios: vec![1, 2, 3, 4],
            methods: Method::ALL.to_vec(),
            kernels: vec![KernelFamily::Linear, KernelFamily::gaussian()],
            censor_rates: vec![0.45],
            n_train: 200,
            n_test: 10_000,
            reps: 100,
            seed: 0,
            pipeline: PipelineConfig::default(),
            calibration_draws: 100_000,
            calibration_tol: 0.005,
            calibrate: true,
        }
    }
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<()> {
        for &s in &self.scenarios {
            ScenarioSpec::new(s)?;
        }
        if self.methods.is_empty() || self.scenarios.is_empty() || self.censor_rates.is_empty() {
            return Err(Error::Config("benchmark needs scenarios, methods and censoring rates".into()));
        }
        if self.kernels.is_empty() && self.methods.iter().any(|m| m.uses_kernel()) {
            return Err(Error::Config("kernel methods requested without kernels".into()));
        }
        if self.reps == 0 || self.n_train < self.pipeline.folds || self.n_test == 0 {
            return Err(Error::Config("reps, n_train and n_test must be positive with n_train >= folds".into()));
        }
        Ok(())
    }
}

/// One method/kernel outcome of one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub scenario: u8,
    pub censor_rate: f64,
    pub method: Method,
    pub kernel: String,
    pub replication: usize,
    pub value: Option<f64>,
    pub lambda: Option<f64>,
    pub error: Option<String>,
    /// Wall time of the fit; not part of any output file.
    #[serde(skip)]
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkResult {
    pub scenario: u8,
    pub censor_rate: f64,
    pub method: Method,
    pub kernel: String,
    pub values: Vec<f64>,
    pub mean_x1000: f64,
    pub sd_x1000: f64,
    pub failures: usize,
    pub valid: bool,
    #[serde(skip)]
    pub runtime_secs: f64,
}

impl BenchmarkResult {
    /// Standard error of the mean value (not scaled).
    pub fn se(&self) -> f64 {
        self.sd_x1000 / 1000.0 / (self.values.len() as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRun {
    pub results: Vec<BenchmarkResult>,
    pub records: Vec<ReplicationRecord>,
    /// `(scenario, target rate, intercept)` actually used.
    pub intercepts: Vec<(u8, f64, f64)>,
    pub valid: bool,
}

impl BenchmarkRun {
    pub fn find(&self, scenario: u8, method: Method, kernel: &str) -> Option<&BenchmarkResult> {
        self.results.iter().find(|r| r.scenario == scenario && r.method == method && r.kernel == kernel)
    }
}

fn kernel_label(method: Method, family: &KernelFamily) -> String {
    if method.uses_kernel() {
        family.name().to_string()
    } else {
        "none".to_string()
    }
}

struct Unit {
    spec: ScenarioSpec,
    rate: f64,
    rep: usize,
}

fn run_unit(config: &BenchmarkConfig, unit: &Unit) -> Vec<ReplicationRecord> {
    let rep_seed = derive(config.seed, &[tag::REPLICATION, unit.spec.id as u64, unit.rep as u64]);
    let mut out = Vec::new();
    let mut push = |method: Method, kernel: String, outcome: Result<(f64, Option<f64>)>, seconds: f64| {
        let (value, lambda, error) = match outcome {
            Ok((v, l)) => (Some(v), l, None),
            Err(e) => {
                log::warn!(
                    "event=replication_failed scenario={} method={method} kernel={kernel} rep={} error=\"{e}\"",
                    unit.spec.id,
                    unit.rep
                );
                (None, None, Some(e.to_string()))
            }
        };
        out.push(ReplicationRecord {
            scenario: unit.spec.id,
            censor_rate: unit.rate,
            method,
            kernel,
            replication: unit.rep,
            value,
            lambda,
            error,
            seconds,
        });
    };

    let data = generate(&unit.spec, config.n_train, derive(rep_seed, &[tag::TRAIN]))
        .and_then(|train| Ok((train.dataset.to_log_scale()?, train)))
        .and_then(|(log_ds, train)| {
            Ok((log_ds, train, generate(&unit.spec, config.n_test, derive(rep_seed, &[tag::TEST]))?))
        });
    let (train_log, train, test) = match data {
        Ok(d) => d,
        Err(e) => {
            let msg = e.to_string();
            for &m in &config.methods {
                for k in kernels_for(config, m) {
                    push(m, kernel_label(m, &k), Err(Error::Fit(msg.clone())), 0.0);
                }
            }
            return out;
        }
    };
    let pipeline = PipelineConfig { seed: rep_seed, ..config.pipeline.clone() };

    let needs_rist = config.methods.iter().any(|m| matches!(m, Method::RistR1 | Method::RistR2));
    let started = Instant::now();
    let rist = if needs_rist { Some(fit_reward_model(&train_log, &pipeline)) } else { None };
    let rist_secs = started.elapsed().as_secs_f64();

    for &method in &config.methods {
        if method == Method::Cox {
            let t0 = Instant::now();
            let outcome = fit_cox(&train_log, Target::Failure)
                .and_then(|m| cox_itr(&m))
                .and_then(|rule| Ok((empirical_value(&rule, &test)?, None)));
            push(method, "none".into(), outcome, t0.elapsed().as_secs_f64());
            continue;
        }
        let t0 = Instant::now();
        let weights = match method {
            Method::OracleT => Ok(train.truth.true_time.iter().map(|t| t.ln()).collect::<Vec<f64>>()),
            Method::RistR1 | Method::RistR2 => match &rist {
                Some(Ok(model)) => method_weights(method, &train_log, Some(model)),
                Some(Err(e)) => Err(Error::Fit(format!("rist: {e}"))),
                None => unreachable!(),
            },
            _ => method_weights(method, &train_log, None),
        };
        let problem = weights.and_then(|w| build_problem(&train_log, &w));
        let shared = t0.elapsed().as_secs_f64()
            + if needs_rist && matches!(method, Method::RistR1 | Method::RistR2) { rist_secs / 2.0 } else { 0.0 };
        for family in &config.kernels {
            let t1 = Instant::now();
            let outcome = problem.as_ref().map_err(|e| Error::Fit(e.to_string())).and_then(|p| {
                let (rule, cv) = fit_weighted(p, family, &pipeline, &stream_for(method, family))?;
                Ok((empirical_value(&rule, &test)?, Some(cv.lambda)))
            });
            push(method, kernel_label(method, family), outcome, shared + t1.elapsed().as_secs_f64());
        }
    }
    out
}

fn kernels_for(config: &BenchmarkConfig, method: Method) -> Vec<KernelFamily> {
    if method.uses_kernel() {
        config.kernels.clone()
    } else {
        vec![KernelFamily::Linear]
    }
}

fn aggregate(config: &BenchmarkConfig, records: &[ReplicationRecord]) -> Vec<BenchmarkResult> {
    let mut results = Vec::new();
    for &scenario in &config.scenarios {
        for &rate in &config.censor_rates {
            for &method in &config.methods {
                for family in kernels_for(config, method) {
                    let kernel = kernel_label(method, &family);
                    let group: Vec<&ReplicationRecord> = records
                        .iter()
                        .filter(|r| {
                            r.scenario == scenario && r.censor_rate == rate && r.method == method && r.kernel == kernel
                        })
                        .collect();
                    let values: Vec<f64> = group.iter().filter_map(|r| r.value).collect();
                    let failures = group.len() - values.len();
                    let (mean, sd) = mean_sd(&values);
                    let valid = !values.is_empty() && (failures as f64) <= 0.1 * group.len() as f64;
                    if !valid {
                        log::warn!("event=invalid_result scenario={scenario} method={method} kernel={kernel} failures={failures}");
                    }
                    results.push(BenchmarkResult {
                        scenario,
                        censor_rate: rate,
                        method,
                        kernel,
                        values,
                        mean_x1000: mean * 1000.0,
                        sd_x1000: sd * 1000.0,
                        failures,
                        valid,
                        runtime_secs: group.iter().map(|r| r.seconds).sum(),
                    });
                }
            }
        }
    }
    results
}

pub fn run_benchmark(config: &BenchmarkConfig) -> Result<BenchmarkRun> {
    config.validate()?;
    let mut units = Vec::new();
    let mut intercepts = Vec::new();
    for &id in &config.scenarios {
        let base = ScenarioSpec::new(id)?;
        for &rate in &config.censor_rates {
            let spec = if config.calibrate {
                let c = calibrate_censoring(
                    &base,
                    rate,
                    config.calibration_tol,
                    config.calibration_draws,
                    derive(config.seed, &[tag::CALIBRATE, id as u64]),
                )?;
                ScenarioSpec { target_censor_rate: rate, ..base.with_intercept(c.intercept) }
            } else {
                base.clone()
            };
            intercepts.push((id, rate, spec.censor_intercept));
            for rep in 0..config.reps {
                units.push(Unit { spec: spec.clone(), rate, rep });
            }
        }
    }
    let started = Instant::now();
    let records: Vec<ReplicationRecord> = units.par_iter().flat_map_iter(|u| run_unit(config, u)).collect();
    log::info!(
        "event=benchmark_done units={} records={} seconds={:.1}",
        units.len(),
        records.len(),
        started.elapsed().as_secs_f64()
    );
    let results = aggregate(config, &records);
    let valid = results.iter().all(|r| r.valid);
    for r in &results {
        log::info!(
            "event=benchmark_result scenario={} method={} kernel={} mean_x1000={:.1} sd_x1000={:.1} failures={} runtime_secs={:.1}",
            r.scenario,
            r.method,
            r.kernel,
            r.mean_x1000,
            r.sd_x1000,
            r.failures,
            r.runtime_secs
        );
    }
    Ok(BenchmarkRun { results, records, intercepts, valid })
}

/// One row per replication.
pub fn write_long_csv<W: Write>(run: &BenchmarkRun, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["scenario", "censor_rate", "method", "kernel", "replication", "value", "lambda", "status"])?;
    for r in &run.records {
        w.write_record([
            r.scenario.to_string(),
            r.censor_rate.to_string(),
            r.method.to_string(),
            r.kernel.clone(),
            r.replication.to_string(),
            r.value.map_or(String::new(), |v| format!("{v:.10}")),
            r.lambda.map_or(String::new(), |v| format!("{v:.6e}")),
            r.error.clone().map_or("ok".to_string(), |e| format!("failed: {e}")),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<benchmark long csv>", e))?;
    Ok(())
}

/// `(header, rows)` of the summary table.
pub fn summary_rows(run: &BenchmarkRun) -> (Vec<&'static str>, Vec<Vec<String>>) {
    let header = vec![
        "scenario",
        "censor_rate",
        "intercept",
        "method",
        "kernel",
        "reps",
        "failures",
        "mean_x1000",
        "sd_x1000",
        "valid",
    ];
    let rows = run
        .results
        .iter()
        .map(|r| {
            let intercept = run
                .intercepts
                .iter()
                .find(|(s, c, _)| *s == r.scenario && *c == r.censor_rate)
                .map_or(f64::NAN, |x| x.2);
            vec![
                r.scenario.to_string(),
                r.censor_rate.to_string(),
                format!("{intercept:.6}"),
                r.method.to_string(),
                r.kernel.clone(),
                (r.values.len() + r.failures).to_string(),
                r.failures.to_string(),
                format!("{:.1}", r.mean_x1000),
                format!("{:.1}", r.sd_x1000),
                r.valid.to_string(),
            ]
        })
        .collect();
    (header, rows)
}

pub fn write_summary_csv<W: Write>(run: &BenchmarkRun, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let (header, rows) = summary_rows(run);
    w.write_record(&header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<benchmark summary csv>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> BenchmarkConfig {
        let mut c = BenchmarkConfig {
            scenarios: vec![1],
            reps: 1,
            n_test: 2000,
            calibration_draws: 5000,
            calibration_tol: 0.02,
            seed: 3,
            ..BenchmarkConfig::default()
        };
        c.pipeline.rist.n_trees = 10;
        c.pipeline.folds = 5;
        c
    }

    #[test]
    fn single_rep_is_deterministic() {
        let c = tiny();
        let a = run_benchmark(&c).unwrap();
        let b = run_benchmark(&c).unwrap();
        assert_eq!(a.records.len(), 9);
        for (x, y) in a.results.iter().zip(&b.results) {
            assert_eq!(x.values, y.values);
            assert_eq!(x.mean_x1000.to_bits(), y.mean_x1000.to_bits());
        }
        let mut s1 = Vec::new();
        let mut s2 = Vec::new();
        write_summary_csv(&a, &mut s1).unwrap();
        write_summary_csv(&b, &mut s2).unwrap();
        assert_eq!(s1, s2);
    }

    #[test]
    fn aggregates_recompute_from_values() {
        let run = run_benchmark(&tiny()).unwrap();
        for r in &run.results {
            let (m, s) = mean_sd(&r.values);
            assert_eq!(r.mean_x1000, m * 1000.0);
            assert_eq!(r.sd_x1000, s * 1000.0);
        }
    }
}
