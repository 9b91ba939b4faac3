//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or configuration, 2 input data, 3 numerical
//! failure. Logs go to standard error as `key=value` lines; result files never
//! contain timings, so reruns with the same seed are byte-identical whatever
//! `--threads` is.

mod config;

pub use config::{
    parse_methods, BenchmarkSection, CalibrateSection, EvaluateSection, RistSection, RunConfig, SvmSection,
};

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::dataset::{load_dataset, read_covariates, LoadOptions, Scale, SurvivalDataset};
use crate::error::{Error, Result};
use crate::eval::{
    crossvalidated_real, matched_value, restricted_mean_measure, run_benchmark, write_long_csv, write_summary_csv,
};
use crate::pipeline::{fit_itr_with_weights, parse_kernel, Method, ModelFile};
use crate::rist::{fit_rist, RistParams};
use crate::rng::{derive, tag};
use crate::sim::{calibrate_censoring, generate, ScenarioSpec};
use crate::svm::Policy;

#[derive(Debug, Parser)]
#[command(name = "survowl", version, about = "Individualized treatment rules from censored survival data")]
pub struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Outcome scale used for fitting.
    #[arg(long, global = true, value_parser = parse_scale)]
    pub scale: Option<Scale>,
    /// Print the effective configuration as TOML and exit.
    #[arg(long, global = true)]
    pub show_config: bool,
    /// Log filter (`error`, `warn`, `info`, `debug`).
    #[arg(long, global = true, default_value = "info")]
    pub log_level: String,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a simulated dataset and its truth sidecar.
    Simulate(SimulateArgs),
    /// Find censoring intercepts for target censoring rates.
    Calibrate(CalibrateArgs),
    /// Fit a treatment rule and write a model file.
    Fit(FitArgs),
    /// Apply a model file to a covariate CSV.
    Predict(PredictArgs),
    /// Run the simulation benchmark.
    Benchmark(BenchmarkArgs),
    /// Score a rule on held-out data, or run repeated cross-validation.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub scenario: u8,
    #[arg(long)]
    pub n: usize,
    /// Dataset path; the truth goes to `<stem>.truth.csv` beside it.
    #[arg(long, default_value = "simulated.csv")]
    pub out: PathBuf,
    #[arg(long, conflicts_with = "censor_rate")]
    pub censor_intercept: Option<f64>,
    /// Calibrate the censoring intercept to this rate first.
    #[arg(long)]
    pub censor_rate: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long, value_delimiter = ',', default_values_t = vec![1u8, 2, 3, 4])]
    pub scenario: Vec<u8>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub target: Vec<f64>,
    #[arg(long)]
    pub draws: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// CSV output; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// `rist-r1`, `rist-r2`, `ico` or `cox`.
    #[arg(long)]
    pub method: String,
    /// `linear` or `gaussian`; ignored by `cox`.
    #[arg(long, default_value = "linear")]
    pub kernel: String,
    #[arg(long, default_value = "model.json")]
    pub out: PathBuf,
    /// Study horizon; the largest observed time when absent.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Write the raw signed weights with their flipped labels to this CSV.
    #[arg(long)]
    pub dump_weights: Option<PathBuf>,
    #[arg(long)]
    pub n_trees: Option<usize>,
    #[arg(long)]
    pub folds: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// CSV with `x1..xd` columns; other columns are ignored.
    #[arg(long)]
    pub covariates: PathBuf,
    /// Decisions CSV; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    #[arg(long, value_delimiter = ',')]
    pub scenario: Vec<u8>,
    /// Target censoring rates.
    #[arg(long, value_delimiter = ',')]
    pub censor: Vec<f64>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub methods: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    pub kernels: Vec<String>,
    #[arg(long)]
    pub n_train: Option<usize>,
    #[arg(long)]
    pub n_test: Option<usize>,
    #[arg(long)]
    pub n_trees: Option<usize>,
    /// Use the built-in censoring intercepts instead of calibrating.
    #[arg(long)]
    pub no_calibrate: bool,
    /// Receives `long.csv` and `summary.csv`.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Score this rule on `--data`; without it, run repeated cross-validation.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub methods: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    pub kernels: Vec<String>,
    #[arg(long)]
    pub n_trees: Option<usize>,
    /// Per-record `δY + (1 − δ)E(T)` rewards used for scoring.
    #[arg(long)]
    pub rewards_out: Option<PathBuf>,
    /// Result CSV; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_scale(s: &str) -> std::result::Result<Scale, String> {
    s.parse::<Scale>().map_err(|e| e.to_string())
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    init_logging(&cli.log_level);
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            log::error!("event=failed error=\"{e}\"");
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn init_logging(level: &str) {
    let _ = env_logger::Builder::new()
        .parse_filters(level)
        .parse_env("SURVOWL_LOG")
        .format(|buf, record| writeln!(buf, "level={} target={} {}", record.level(), record.target(), record.args()))
        .try_init();
}

fn execute(cli: Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(scale) = cli.scale {
        config.scale = scale;
    }
    if let Some(command) = &cli.command {
        apply_overrides(&mut config, command);
    }
    config.validate()?;
    if cli.show_config {
        print!("{}", config.to_toml()?);
        return Ok(());
    }
    let Some(command) = cli.command else {
        return Err(Error::Config("no command given (see --help)".into()));
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let started = std::time::Instant::now();
    let out = pool.install(|| dispatch(&config, command));
    log::info!("event=finished runtime_secs={:.3}", started.elapsed().as_secs_f64());
    out
}

fn apply_overrides(config: &mut RunConfig, command: &Command) {
    match command {
        Command::Fit(a) => {
            if let Some(n) = a.n_trees {
                config.rist.n_trees = n;
            }
            if let Some(f) = a.folds {
                config.svm.folds = f;
            }
        }
        Command::Calibrate(a) => {
            if let Some(d) = a.draws {
                config.calibrate.draws = d;
            }
            if let Some(t) = a.tol {
                config.calibrate.tol = t;
            }
        }
        Command::Benchmark(a) => {
            let b = &mut config.benchmark;
            if !a.scenario.is_empty() {
                b.scenarios = a.scenario.clone();
            }
            if !a.censor.is_empty() {
                b.censor_rates = a.censor.clone();
            }
            if let Some(r) = a.reps {
                b.reps = r;
            }
            if !a.methods.is_empty() {
                b.methods = a.methods.clone();
            }
            if let Some(n) = a.n_train {
                b.n_train = n;
            }
            if let Some(n) = a.n_test {
                b.n_test = n;
            }
            if a.no_calibrate {
                b.calibrate = false;
            }
            if !a.kernels.is_empty() {
                config.svm.kernels = a.kernels.clone();
            }
            if let Some(n) = a.n_trees {
                config.rist.n_trees = n;
            }
        }
        Command::Evaluate(a) => {
            let e = &mut config.evaluate;
            if let Some(r) = a.repeats {
                e.repeats = r;
            }
            if let Some(f) = a.folds {
                e.folds = f;
            }
            if !a.methods.is_empty() {
                e.methods = a.methods.clone();
            }
            if !a.kernels.is_empty() {
                config.svm.kernels = a.kernels.clone();
            }
            if let Some(n) = a.n_trees {
                config.rist.n_trees = n;
            }
        }
        Command::Simulate(_) | Command::Predict(_) => {}
    }
}

fn dispatch(config: &RunConfig, command: Command) -> Result<()> {
    match command {
        Command::Simulate(a) => simulate(config, &a),
        Command::Calibrate(a) => calibrate(config, &a),
        Command::Fit(a) => fit(config, &a),
        Command::Predict(a) => predict(&a),
        Command::Benchmark(a) => benchmark(config, &a),
        Command::Evaluate(a) => evaluate(config, &a),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(std::io::stdout().lock()),
    })
}

/// `data.csv` → `data.truth.csv`.
pub fn truth_path(dataset: &Path) -> PathBuf {
    let stem = dataset.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    dataset.with_file_name(format!("{stem}.truth.csv"))
}

fn load_scaled(path: &Path, tau: Option<f64>, scale: Scale) -> Result<SurvivalDataset> {
    load_dataset(path, &LoadOptions { tau })?.with_scale(scale)
}

fn simulate(config: &RunConfig, a: &SimulateArgs) -> Result<()> {
    let mut spec = ScenarioSpec::new(a.scenario)?;
    if let Some(c) = a.censor_intercept {
        spec = spec.with_intercept(c);
    }
    if let Some(rate) = a.censor_rate {
        let seed = derive(config.seed, &[tag::CALIBRATE, spec.id as u64]);
        let cal = calibrate_censoring(&spec, rate, config.calibrate.tol, config.calibrate.draws, seed)?;
        spec = spec.with_intercept(cal.intercept);
    }
    let sim = generate(&spec, a.n, config.seed)?;
    let mut w = create(&a.out)?;
    crate::dataset::write_dataset(&sim.dataset, &mut w)?;
    w.flush().map_err(|e| Error::io(&a.out, e))?;
    let truth = truth_path(&a.out);
    let mut t = create(&truth)?;
    sim.truth.write_csv(&mut t)?;
    t.flush().map_err(|e| Error::io(&truth, e))?;
    let censored = sim.dataset.records().iter().filter(|r| !r.event).count();
    log::info!(
        "event=simulated scenario={} n={} intercept={} censored={censored} out={} truth={}",
        spec.id,
        a.n,
        spec.censor_intercept,
        a.out.display(),
        truth.display()
    );
    Ok(())
}

fn calibrate(config: &RunConfig, a: &CalibrateArgs) -> Result<()> {
    let mut rows = Vec::new();
    for &id in &a.scenario {
        let spec = ScenarioSpec::new(id)?;
        let seed = derive(config.seed, &[tag::CALIBRATE, id as u64]);
        for &target in &a.target {
            let cal = calibrate_censoring(&spec, target, config.calibrate.tol, config.calibrate.draws, seed)?;
            rows.push([
                id.to_string(),
                target.to_string(),
                cal.intercept.to_string(),
                cal.rate.to_string(),
                cal.iterations.to_string(),
            ]);
        }
    }
    let mut w = csv::Writer::from_writer(output(a.out.as_deref())?);
    w.write_record(["scenario", "target", "intercept", "rate", "iterations"])?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush().map_err(|e| Error::io("<calibrate>", e))
}

fn fit(config: &RunConfig, a: &FitArgs) -> Result<()> {
    let method: Method = a.method.parse()?;
    let mut local = config.clone();
    local.svm.kernels = vec![a.kernel.clone()];
    parse_kernel(&a.kernel)?;
    let family = local.kernels()?.remove(0);
    let ds = load_scaled(&a.data, a.tau, config.scale)?;
    let (model, weights) = fit_itr_with_weights(&ds, method, &family, &local.pipeline()?)?;
    model.save(&a.out)?;
    if let Some(path) = &a.dump_weights {
        let weights = weights.ok_or_else(|| Error::Config(format!("{method} has no weights to dump")))?;
        let mut w = csv::Writer::from_writer(create(path)?);
        w.write_record(["row", "treatment", "weight", "label", "abs_weight"])?;
        for (i, (r, &wt)) in ds.records().iter().zip(&weights).enumerate() {
            let label = if wt < 0.0 { r.treatment.flip() } else { r.treatment };
            w.write_record([
                i.to_string(),
                r.treatment.to_string(),
                wt.to_string(),
                label.to_string(),
                wt.abs().to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    log::info!(
        "event=fitted method={method} kernel={} lambda={} out={}",
        if method.uses_kernel() { family.name() } else { "none" },
        model.lambda.map_or("none".to_string(), |l| l.to_string()),
        a.out.display()
    );
    Ok(())
}

fn predict(a: &PredictArgs) -> Result<()> {
    let model = ModelFile::load(&a.model)?;
    let file = File::open(&a.covariates).map_err(|e| Error::io(&a.covariates, e))?;
    let rows = read_covariates(file)?;
    let mut w = csv::Writer::from_writer(output(a.out.as_deref())?);
    w.write_record(["row", "decision"])?;
    for (i, x) in rows.iter().enumerate() {
        w.write_record([i.to_string(), model.decide(x)?.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<predict>", e))?;
    log::info!("event=predicted rows={}", rows.len());
    Ok(())
}

fn benchmark(config: &RunConfig, a: &BenchmarkArgs) -> Result<()> {
    let run = run_benchmark(&config.benchmark_config()?)?;
    let long = a.out_dir.join("long.csv");
    let summary = a.out_dir.join("summary.csv");
    write_long_csv(&run, create(&long)?)?;
    write_summary_csv(&run, create(&summary)?)?;
    log::info!("event=benchmark_written long={} summary={} valid={}", long.display(), summary.display(), run.valid);
    Ok(())
}

fn evaluate(config: &RunConfig, a: &EvaluateArgs) -> Result<()> {
    match &a.model {
        Some(model_path) => {
            let model = ModelFile::load(model_path)?;
            let ds = load_scaled(&a.data, a.tau, model.scale)?;
            let params = RistParams { seed: derive(config.seed, &[tag::EVAL]), ..config.pipeline()?.rist };
            let rist = fit_rist(&ds, &params)?;
            let rewards = restricted_mean_measure(&ds, &rist)?;
            if let Some(path) = &a.rewards_out {
                let mut w = csv::Writer::from_writer(create(path)?);
                w.write_record(["row", "reward"])?;
                for (i, r) in rewards.iter().enumerate() {
                    w.write_record([i.to_string(), r.to_string()])?;
                }
                w.flush().map_err(|e| Error::io(path, e))?;
            }
            for r in ds.records() {
                model.decide(&r.covariates)?;
            }
            let matched = ds.records().iter().filter(|r| model.rule.decide(&r.covariates) == r.treatment).count();
            let value = matched_value(&model.rule, &ds, &rewards)?;
            let mut w = csv::Writer::from_writer(output(a.out.as_deref())?);
            w.write_record(["method", "scale", "n", "matched", "matched_value"])?;
            w.write_record([
                model.method.to_string(),
                model.scale.to_string(),
                ds.len().to_string(),
                matched.to_string(),
                value.to_string(),
            ])?;
            w.flush().map_err(|e| Error::io("<evaluate>", e))
        }
        None => {
            let ds = load_scaled(&a.data, a.tau, config.scale)?;
            let rows = crossvalidated_real(&ds, &config.real_config()?)?;
            let mut w = csv::Writer::from_writer(output(a.out.as_deref())?);
            w.write_record(["method", "kernel", "mean", "sd", "valid_repeats", "skipped_folds"])?;
            for r in rows {
                let valid = r.repeat_values.iter().flatten().count();
                w.write_record([
                    r.method.to_string(),
                    r.kernel,
                    r.mean.to_string(),
                    r.sd.to_string(),
                    valid.to_string(),
                    r.skipped_folds.to_string(),
                ])?;
            }
            w.flush().map_err(|e| Error::io("<evaluate>", e))
        }
    }
}
