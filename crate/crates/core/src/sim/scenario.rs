use rand::Rng as _;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Record, Scale, SurvivalDataset, Treatment};
use crate::error::{Error, Result};
use crate::rng::{substream, tag, Rng};

/// One of the four simulation designs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub id: u8,
    pub d: usize,
    pub tau: f64,
    /// First constant of the censoring model (log-time location or log-hazard).
    pub censor_intercept: f64,
    pub target_censor_rate: f64,
}

impl ScenarioSpec {
    /// Built-in constants for scenario `id`.
    pub fn new(id: u8) -> Result<Self> {
        let (d, tau, censor_intercept) = match id {
            1 => (10, 2.5, 0.1),
            2 => (10, 8.0, -0.5),
            3 => (5, 8.0, -1.5),
            4 => (10, 2.0, 0.0),
            _ => return Err(Error::Config(format!("unknown scenario {id}; expected 1-4"))),
        };
        Ok(Self { id, d, tau, censor_intercept, target_censor_rate: 0.45 })
    }

    pub fn with_intercept(&self, censor_intercept: f64) -> Self {
        Self { censor_intercept, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        let fresh = Self::new(self.id)?;
        if fresh.d != self.d || fresh.tau != self.tau {
            return Err(Error::Config(format!("scenario {} requires d={} and tau={}", self.id, fresh.d, fresh.tau)));
        }
        if !self.censor_intercept.is_finite() {
            return Err(Error::Config("censor intercept must be finite".into()));
        }
        if !(self.target_censor_rate > 0.0 && self.target_censor_rate < 1.0) {
            return Err(Error::Config("target censoring rate must lie in (0, 1)".into()));
        }
        Ok(())
    }

    pub fn failure_kind(&self) -> ModelKind {
        match self.id {
            2 => ModelKind::Cox,
            _ => ModelKind::Aft,
        }
    }

    pub fn censor_kind(&self) -> ModelKind {
        match self.id {
            1 | 2 => ModelKind::Aft,
            _ => ModelKind::Cox,
        }
    }

    /// Failure linear predictor before noise: log-time location (AFT) or log-hazard (Cox).
    pub fn failure_predictor(&self, x: &[f64], a: Treatment) -> f64 {
        let a = a.value();
        match self.id {
            1 => -0.2 - 0.5 * x[0] + 0.5 * x[1] + 0.3 * x[2] + (0.5 - 0.1 * x[0] - 0.6 * x[1] + 0.1 * x[2]) * a,
            2 => -0.2 - 1.5 * x[0].powf(1.5) + 0.5 * x[1] + (0.8 - 0.7 * x[0].sqrt() - 1.2 * x[1] * x[1]) * a,
            3 => {
                let tree = if x[1] > 0.5 && x[2] > 0.5 { 1.0 } else { 0.0 };
                x[0] + tree + self.interaction(x) * a
            }
            _ => -0.5 - 0.8 * x[0] + 0.7 * x[1] + 0.2 * x[2] + (0.6 - 0.4 * x[0] - 0.2 * x[1] - 0.4 * x[2]) * a,
        }
    }

    /// Coefficient of `A` in the failure model.
    pub fn interaction(&self, x: &[f64]) -> f64 {
        match self.id {
            1 => 0.5 - 0.1 * x[0] - 0.6 * x[1] + 0.1 * x[2],
            2 => 0.8 - 0.7 * x[0].sqrt() - 1.2 * x[1] * x[1],
            3 => {
                let corner = (x[3] < 0.3 && x[4] < 0.3) || (x[3] > 0.7 && x[4] > 0.7);
                0.3 - x[0] + if corner { 2.0 } else { 0.0 }
            }
            _ => 0.6 - 0.4 * x[0] - 0.2 * x[1] - 0.4 * x[2],
        }
    }

    pub fn censor_predictor(&self, x: &[f64], a: Treatment) -> f64 {
        let a = a.value();
        let c0 = self.censor_intercept;
        match self.id {
            1 => c0 - 0.8 * x[0] + 0.4 * x[1] + 0.4 * x[2] + (0.5 - 0.1 * x[0] - 0.6 * x[1] + 0.3 * x[2]) * a,
            2 => {
                c0 + 0.7 * x[0]
                    + x[1] * x[1]
                    + 0.6 * x[2]
                    + 0.1 * x[3]
                    + (0.2 + x[0].powf(2.5) - 2.0 * x[1] + 0.5 * x[2]) * a
            }
            3 => c0 + x[0] + (1.0 + 0.6 * x[1].powf(1.5)) * a,
            _ => c0 - 0.5 * x[0] - 0.5 * x[1] + 0.2 * x[2] - (1.0 - 0.5 * x[0] + 0.3 * x[1] - 0.5 * x[2]) * a,
        }
    }

    /// Untruncated failure time for a given noise draw.
    pub fn failure_time(&self, x: &[f64], a: Treatment, noise: f64) -> f64 {
        self.failure_kind().time(self.failure_predictor(x, a), noise)
    }

    pub fn censor_time(&self, x: &[f64], a: Treatment, noise: f64) -> f64 {
        self.censor_kind().time(self.censor_predictor(x, a), noise)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// `log T = predictor + ε`, `ε ~ N(0, 1)`.
    Aft,
    /// Hazard `2t exp(predictor)`; noise is a unit exponential.
    Cox,
}

impl ModelKind {
    pub fn time(self, predictor: f64, noise: f64) -> f64 {
        match self {
            ModelKind::Aft => (predictor + noise).exp(),
            ModelKind::Cox => sample_cox_time(predictor, noise),
        }
    }

    pub fn draw_noise(self, rng: &mut Rng) -> f64 {
        match self {
            ModelKind::Aft => StandardNormal.sample(rng),
            ModelKind::Cox => Exp1.sample(rng),
        }
    }
}

/// Inverts `Λ(t) = t² e^g` at a unit exponential draw `e`.
pub fn sample_cox_time(g: f64, e: f64) -> f64 {
    (e / g.exp()).sqrt()
}

/// Hidden quantities kept apart from the observed dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    /// `min(T̃, τ)` under the assigned arm.
    pub true_time: Vec<f64>,
    pub oracle_label: Vec<Treatment>,
    /// `min(T̃, τ)` under `A = +1` and `A = -1`, sharing one noise draw.
    pub potential: Vec<[f64; 2]>,
}

impl Truth {
    pub fn len(&self) -> usize {
        self.true_time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.true_time.is_empty()
    }

    pub fn potential_time(&self, i: usize, a: Treatment) -> f64 {
        match a {
            Treatment::Plus => self.potential[i][0],
            Treatment::Minus => self.potential[i][1],
        }
    }

    /// Writes `true_time,t_plus,t_minus,oracle_label`, one row per record.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["true_time", "t_plus", "t_minus", "oracle_label"])?;
        for i in 0..self.len() {
            w.write_record([
                self.true_time[i].to_string(),
                self.potential[i][0].to_string(),
                self.potential[i][1].to_string(),
                self.oracle_label[i].to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<truth>", e))?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simulated {
    pub dataset: SurvivalDataset,
    pub truth: Truth,
}

pub(crate) struct Draw {
    pub x: Vec<f64>,
    pub a: Treatment,
    pub t_plus: f64,
    pub t_minus: f64,
    pub c: f64,
}

/// Record `i` of a simulated sample drawn from stream `(seed, stream, i)`.
pub(crate) fn draw(spec: &ScenarioSpec, seed: u64, stream: u64, i: usize) -> Draw {
    let mut rng = substream(seed, &[stream, i as u64]);
    let x: Vec<f64> = (0..spec.d).map(|_| rng.random::<f64>()).collect();
    let a = if rng.random_bool(0.5) { Treatment::Plus } else { Treatment::Minus };
    let nt = spec.failure_kind().draw_noise(&mut rng);
    let nc = spec.censor_kind().draw_noise(&mut rng);
    let tau = spec.tau;
    let t_plus = spec.failure_time(&x, Treatment::Plus, nt).min(tau);
    let t_minus = spec.failure_time(&x, Treatment::Minus, nt).min(tau);
    let c = spec.censor_time(&x, a, nc).max(f64::MIN_POSITIVE);
    Draw { x, a, t_plus: t_plus.max(f64::MIN_POSITIVE), t_minus: t_minus.max(f64::MIN_POSITIVE), c }
}

/// Draws `n` records; record `i` uses stream `(seed, GENERATE, i)`.
pub fn generate(spec: &ScenarioSpec, n: usize, seed: u64) -> Result<Simulated> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::Domain("cannot generate an empty sample".into()));
    }
    let draws: Vec<Draw> = (0..n).into_par_iter().map(|i| draw(spec, seed, tag::GENERATE, i)).collect();
    let mut records = Vec::with_capacity(n);
    let mut truth = Truth {
        true_time: Vec::with_capacity(n),
        oracle_label: Vec::with_capacity(n),
        potential: Vec::with_capacity(n),
    };
    for d in draws {
        let t = if d.a == Treatment::Plus { d.t_plus } else { d.t_minus };
        truth.oracle_label.push(super::oracle_rule(spec, &d.x));
        truth.true_time.push(t);
        truth.potential.push([d.t_plus, d.t_minus]);
        records.push(Record { covariates: d.x, treatment: d.a, time: t.min(d.c), event: t <= d.c, propensity: 0.5 });
    }
    let dataset = SurvivalDataset::new(records, spec.tau, Scale::Natural)?;
    Ok(Simulated { dataset, truth })
}

/// Fraction censored among `n` draws at the scenario's censoring intercept.
pub fn censoring_rate(spec: &ScenarioSpec, n: usize, seed: u64) -> f64 {
    let censored: usize = (0..n)
        .into_par_iter()
        .map(|i| {
            let d = draw(spec, seed, tag::CALIBRATE, i);
            let t = if d.a == Treatment::Plus { d.t_plus } else { d.t_minus };
            usize::from(t > d.c)
        })
        .sum();
    censored as f64 / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cox_time_examples() {
        assert_eq!(sample_cox_time(0.0, 1.0), 1.0);
        assert!((sample_cox_time(4f64.ln(), 1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn unknown_scenario() {
        assert!(matches!(ScenarioSpec::new(5), Err(Error::Config(_))));
    }

    #[test]
    fn constants() {
        let s = ScenarioSpec::new(3).unwrap();
        assert_eq!((s.d, s.tau), (5, 8.0));
        let s = ScenarioSpec::new(4).unwrap();
        assert_eq!((s.d, s.tau), (10, 2.0));
    }

    #[test]
    fn truncation_contract() {
        for id in 1..=4 {
            let spec = ScenarioSpec::new(id).unwrap();
            let sim = generate(&spec, 500, 3).unwrap();
            for (r, &t) in sim.dataset.records().iter().zip(&sim.truth.true_time) {
                assert!(r.time > 0.0 && r.time <= spec.tau);
                assert_eq!(r.event, r.time == t);
                assert!(t <= spec.tau);
            }
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = ScenarioSpec::new(2).unwrap();
        assert_eq!(generate(&spec, 50, 9).unwrap(), generate(&spec, 50, 9).unwrap());
        assert_ne!(generate(&spec, 50, 9).unwrap(), generate(&spec, 50, 10).unwrap());
    }

    #[test]
    fn cox_time_distribution() {
        // P(T <= 1) = 1 - e^{-1} at g = 0
        let mut rng = substream(5, &[]);
        let n = 100_000;
        let hits = (0..n).filter(|_| sample_cox_time(0.0, ModelKind::Cox.draw_noise(&mut rng)) <= 1.0).count();
        let p = 1.0 - (-1.0f64).exp();
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((hits as f64 / n as f64 - p).abs() < 3.0 * se);
    }
}
