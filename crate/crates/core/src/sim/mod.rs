//! Simulation scenarios, oracle rules and censoring calibration.

mod quadrature;
mod scenario;

use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use quadrature::{gauss_legendre, integrate};
pub use scenario::{censoring_rate, generate, sample_cox_time, ModelKind, ScenarioSpec, Simulated, Truth};

use crate::dataset::Treatment;
use crate::error::{Error, Result};
use crate::rng::tag;
use crate::svm::Policy;

fn rule200() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(200))
}

/// `E log min(T, τ)` when `Λ(t) = t² e^g`.
///
/// Uses `log min(T, τ) = log τ − ∫_0^τ I(T ≤ t)/t dt`, so the expectation is
/// `log τ − ∫_0^τ (1 − exp(−t² e^g))/t dt`.
pub fn cox_truncated_log_mean(g: f64, tau: f64) -> f64 {
    let eg = g.exp();
    let f = |t: f64| -(-t * t * eg).exp_m1() / t;
    tau.ln() - integrate(f, 0.0, tau, rule200())
}

/// Sign of the arm contrast in expected truncated log survival.
pub fn oracle_rule(spec: &ScenarioSpec, x: &[f64]) -> Treatment {
    match spec.failure_kind() {
        // log min(T̃, τ) is monotone in the location, so the contrast shares the sign of the A term.
        ModelKind::Aft => Treatment::from_sign(spec.interaction(x)),
        ModelKind::Cox => {
            let plus = cox_truncated_log_mean(spec.failure_predictor(x, Treatment::Plus), spec.tau);
            let minus = cox_truncated_log_mean(spec.failure_predictor(x, Treatment::Minus), spec.tau);
            Treatment::from_sign(plus - minus)
        }
    }
}

/// Oracle rule of a scenario as a [`Policy`].
#[derive(Debug, Clone)]
pub struct OraclePolicy(pub ScenarioSpec);

impl Policy for OraclePolicy {
    fn decide(&self, x: &[f64]) -> Treatment {
        oracle_rule(&self.0, x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloValue {
    pub value: f64,
    pub se: f64,
    pub n: usize,
}

/// Mean of `log min(T̃, τ)` with `A = policy(x)`, over `n` fresh draws.
///
/// Draw `i` uses stream `(seed, ORACLE, i)` for any policy, so two policies
/// evaluated with one seed share covariates and noise.
pub fn policy_value<P: Policy + ?Sized>(spec: &ScenarioSpec, policy: &P, n: usize, seed: u64) -> MonteCarloValue {
    let chunk = 4096;
    let partial: Vec<(f64, f64)> = (0..n.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let mut s = 0.0;
            let mut s2 = 0.0;
            for i in c * chunk..((c + 1) * chunk).min(n) {
                let d = scenario::draw(spec, seed, tag::ORACLE, i);
                let t = match policy.decide(&d.x) {
                    Treatment::Plus => d.t_plus,
                    Treatment::Minus => d.t_minus,
                };
                let v = t.ln();
                s += v;
                s2 += v * v;
            }
            (s, s2)
        })
        .collect();
    let (s, s2) = partial.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
    let nf = n as f64;
    let mean = s / nf;
    let var = (s2 / nf - mean * mean).max(0.0) * nf / (nf - 1.0).max(1.0);
    MonteCarloValue { value: mean, se: (var / nf).sqrt(), n }
}

pub fn oracle_value(spec: &ScenarioSpec, n: usize, seed: u64) -> Result<MonteCarloValue> {
    spec.validate()?;
    if n < 2 {
        return Err(Error::Domain("oracle value needs at least 2 draws".into()));
    }
    Ok(policy_value(spec, &OraclePolicy(spec.clone()), n, seed))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub intercept: f64,
    pub rate: f64,
    pub iterations: usize,
    /// `(intercept, rate)` pairs evaluated along the way.
    pub curve: Vec<(f64, f64)>,
}

/// Bisection on the censoring intercept until the censoring rate over `n`
/// draws is within `tol` of `target`. All evaluations share one stream.
pub fn calibrate_censoring(spec: &ScenarioSpec, target: f64, tol: f64, n: usize, seed: u64) -> Result<Calibration> {
    spec.validate()?;
    if !(target > 0.05 && target < 0.95) {
        return Err(Error::Config(format!("target censoring rate {target} outside (0.05, 0.95)")));
    }
    if !(tol > 0.0) {
        return Err(Error::Config("calibration tolerance must be positive".into()));
    }
    let rate_at = |c: f64| censoring_rate(&spec.with_intercept(c), n, seed);
    let center = spec.censor_intercept;
    let span = 8.0;
    let mut curve: Vec<(f64, f64)> = (0..=8)
        .map(|k| {
            let c = center - span + 2.0 * span * k as f64 / 8.0;
            (c, rate_at(c))
        })
        .collect();
    let increasing = curve[8].1 >= curve[0].1;
    let monotone = curve.windows(2).all(|w| if increasing { w[1].1 >= w[0].1 } else { w[1].1 <= w[0].1 });
    let (lo_rate, hi_rate) = (curve[0].1.min(curve[8].1), curve[0].1.max(curve[8].1));
    if !monotone || target < lo_rate || target > hi_rate {
        let diag: Vec<String> = curve.iter().map(|(c, r)| format!("{c:.3}:{r:.4}")).collect();
        return Err(Error::Fit(format!(
            "cannot bracket censoring rate {target} for scenario {} (monotone={monotone}); curve {}",
            spec.id,
            diag.join(" ")
        )));
    }
    // orient so that rate increases from `lo` to `hi`
    let (mut lo, mut hi) = if increasing { (center - span, center + span) } else { (center + span, center - span) };
    for iterations in 1..=200 {
        let mid = 0.5 * (lo + hi);
        let r = rate_at(mid);
        curve.push((mid, r));
        if (r - target).abs() <= tol {
            log::info!(
                "event=calibrated scenario={} target={target} intercept={mid:.6} rate={r:.5} iterations={iterations}",
                spec.id
            );
            return Ok(Calibration { intercept: mid, rate: r, iterations, curve });
        }
        if r < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NotConverged {
        stage: "calibrate",
        iterations: 200,
        residual: curve.last().map_or(f64::NAN, |p| (p.1 - target).abs()),
        best: vec![0.5 * (lo + hi)],
    })
}
