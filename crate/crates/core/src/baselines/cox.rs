//! Cox proportional hazards on the design `(X, A, A·X)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::{SurvivalDataset, Treatment};
use crate::error::{Error, Result};
use crate::survival::StepFunction;
use crate::svm::Policy;

const GRAD_TOL: f64 = 1e-8;
const MAX_ITER: usize = 50;
const MAX_HALVINGS: usize = 40;
const LIK_SLACK: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Failure,
    /// Fits the censoring time, using `1 - δ` as the event indicator.
    Censoring,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoxModel {
    pub coefficients: Vec<f64>,
    pub baseline_cumhaz: StepFunction,
    pub converged: bool,
    pub log_partial_likelihood: f64,
    pub target: Target,
    pub dim: usize,
    pub iterations: usize,
    /// Log partial likelihood after each accepted Newton step, starting at β = 0.
    pub likelihood_trace: Vec<f64>,
}

/// Design row `(x, a, a·x)`.
pub fn design_row(x: &[f64], a: Treatment) -> Vec<f64> {
    let av = a.value();
    let mut z = Vec::with_capacity(2 * x.len() + 1);
    z.extend_from_slice(x);
    z.push(av);
    z.extend(x.iter().map(|v| av * v));
    z
}

struct Design {
    /// Row-major, sorted by decreasing time.
    z: Vec<Vec<f64>>,
    times: Vec<f64>,
    events: Vec<bool>,
}

impl Design {
    fn new(dataset: &SurvivalDataset, target: Target) -> Self {
        let mut order: Vec<usize> = (0..dataset.len()).collect();
        let recs = dataset.records();
        order.sort_by(|&a, &b| recs[b].time.total_cmp(&recs[a].time));
        Self {
            z: order.iter().map(|&i| design_row(&recs[i].covariates, recs[i].treatment)).collect(),
            times: order.iter().map(|&i| recs[i].time).collect(),
            events: order
                .iter()
                .map(|&i| match target {
                    Target::Failure => recs[i].event,
                    Target::Censoring => !recs[i].event,
                })
                .collect(),
        }
    }

    /// Groups of equal time, in decreasing time order.
    fn groups(&self) -> Vec<std::ops::Range<usize>> {
        let mut out = Vec::new();
        let mut start = 0;
        for i in 1..=self.times.len() {
            if i == self.times.len() || self.times[i] != self.times[start] {
                out.push(start..i);
                start = i;
            }
        }
        out
    }

    /// Breslow log partial likelihood, gradient and negative Hessian.
    fn evaluate(&self, beta: &[f64], want_derivatives: bool) -> (f64, DVector<f64>, DMatrix<f64>) {
        let p = beta.len();
        let eta: Vec<f64> = self.z.iter().map(|z| z.iter().zip(beta).map(|(a, b)| a * b).sum()).collect();
        let shift = eta.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut s0 = 0.0;
        let mut s1 = vec![0.0; p];
        let mut s2 = DMatrix::<f64>::zeros(if want_derivatives { p } else { 0 }, if want_derivatives { p } else { 0 });
        let mut loglik = 0.0;
        let mut grad = DVector::<f64>::zeros(p);
        let mut info = DMatrix::<f64>::zeros(p, p);
        for g in self.groups() {
            for i in g.clone() {
                let w = (eta[i] - shift).exp();
                s0 += w;
                for a in 0..p {
                    s1[a] += w * self.z[i][a];
                }
                if want_derivatives {
                    for a in 0..p {
                        let wa = w * self.z[i][a];
                        for b in a..p {
                            s2[(a, b)] += wa * self.z[i][b];
                        }
                    }
                }
            }
            let d = g.clone().filter(|&i| self.events[i]).count();
            if d == 0 {
                continue;
            }
            let df = d as f64;
            for i in g.clone().filter(|&i| self.events[i]) {
                loglik += eta[i];
                if want_derivatives {
                    for a in 0..p {
                        grad[a] += self.z[i][a];
                    }
                }
            }
            loglik -= df * (s0.ln() + shift);
            if want_derivatives {
                for a in 0..p {
                    let ma = s1[a] / s0;
                    grad[a] -= df * ma;
                    for b in a..p {
                        let v = df * (s2[(a, b)] / s0 - ma * s1[b] / s0);
                        info[(a, b)] += v;
                    }
                }
            }
        }
        if want_derivatives {
            for a in 0..p {
                for b in 0..a {
                    info[(a, b)] = info[(b, a)];
                }
            }
        }
        (loglik, grad, info)
    }

    fn breslow(&self, beta: &[f64]) -> Result<StepFunction> {
        let eta: Vec<f64> = self.z.iter().map(|z| z.iter().zip(beta).map(|(a, b)| a * b).sum()).collect();
        let mut s0 = 0.0;
        let mut jumps = Vec::new();
        for g in self.groups() {
            for i in g.clone() {
                s0 += eta[i].exp();
            }
            let d = g.clone().filter(|&i| self.events[i]).count();
            if d > 0 {
                jumps.push((self.times[g.start], d as f64 / s0));
            }
        }
        jumps.reverse();
        let mut acc = 0.0;
        let mut knots = Vec::with_capacity(jumps.len());
        let mut values = Vec::with_capacity(jumps.len());
        for (t, h) in jumps {
            acc += h;
            knots.push(t);
            values.push(acc);
        }
        StepFunction::new(knots, values, 0.0)
    }
}

fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

pub fn fit_cox(dataset: &SurvivalDataset, target: Target) -> Result<CoxModel> {
    let d = dataset.dim();
    let p = 2 * d + 1;
    if dataset.len() <= p {
        return Err(Error::Domain(format!("Cox fit needs more than {p} records, got {}", dataset.len())));
    }
    let design = Design::new(dataset, target);
    if !design.events.iter().any(|&e| e) {
        return Err(Error::Fit(format!("no events for the {target:?} target")));
    }

    let mut beta = vec![0.0; p];
    let (mut loglik, mut grad, mut info) = design.evaluate(&beta, true);
    let mut trace = vec![loglik];
    let mut iterations = 0;
    while inf_norm(&grad) > GRAD_TOL {
        if iterations >= MAX_ITER {
            return Err(Error::NotConverged { stage: "cox", iterations, residual: inf_norm(&grad), best: beta });
        }
        let step = match info.clone().cholesky() {
            Some(ch) => ch.solve(&grad),
            None => {
                return Err(Error::NotConverged { stage: "cox", iterations, residual: inf_norm(&grad), best: beta })
            }
        };
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let cand: Vec<f64> = beta.iter().zip(step.iter()).map(|(b, s)| b + scale * s).collect();
            let (l, _, _) = design.evaluate(&cand, false);
            // slack for rounding in the likelihood sum once the step is tiny
            if l.is_finite() && l >= loglik - LIK_SLACK * (1.0 + loglik.abs()) {
                accepted = Some(cand);
                break;
            }
            scale *= 0.5;
        }
        let Some(cand) = accepted else {
            return Err(Error::NotConverged { stage: "cox", iterations, residual: inf_norm(&grad), best: beta });
        };
        beta = cand;
        (loglik, grad, info) = design.evaluate(&beta, true);
        trace.push(loglik);
        iterations += 1;
    }
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::Numeric("non-finite Cox coefficients".into()));
    }
    log::debug!("event=cox_fit target={target:?} iterations={iterations} loglik={loglik:.6}");
    Ok(CoxModel {
        baseline_cumhaz: design.breslow(&beta)?,
        coefficients: beta,
        converged: true,
        log_partial_likelihood: loglik,
        target,
        dim: d,
        iterations,
        likelihood_trace: trace,
    })
}

impl CoxModel {
    pub fn linear_predictor(&self, x: &[f64], a: Treatment) -> f64 {
        design_row(x, a).iter().zip(&self.coefficients).map(|(z, b)| z * b).sum()
    }

    /// `exp(-Λ₀(t) exp(βᵀz))`.
    pub fn survival(&self, x: &[f64], a: Treatment, t: f64) -> f64 {
        (-self.baseline_cumhaz.eval(t) * self.linear_predictor(x, a).exp()).exp()
    }

    /// Gradient of the log partial likelihood at `beta` on `dataset`.
    pub fn gradient_at(dataset: &SurvivalDataset, target: Target, beta: &[f64]) -> Vec<f64> {
        Design::new(dataset, target).evaluate(beta, true).1.iter().cloned().collect()
    }
}

/// `Ŝ_C(t | x, a)` from a censoring-target model.
pub fn censoring_survival(model: &CoxModel, x: &[f64], a: Treatment, t: f64) -> Result<f64> {
    if model.target != Target::Censoring {
        return Err(Error::Config("censoring_survival needs a censoring-target Cox model".into()));
    }
    Ok(model.survival(x, a, t))
}

/// `sign(-(β_A + β_AX · x))`: the arm with lower predicted hazard.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoxRule {
    pub beta_a: f64,
    pub beta_ax: Vec<f64>,
}

impl CoxRule {
    pub fn decide(&self, x: &[f64]) -> Treatment {
        let contrast = self.beta_a + self.beta_ax.iter().zip(x).map(|(b, v)| b * v).sum::<f64>();
        Treatment::from_sign(-contrast)
    }
}

impl Policy for CoxRule {
    fn decide(&self, x: &[f64]) -> Treatment {
        CoxRule::decide(self, x)
    }
}

pub fn cox_itr(model: &CoxModel) -> Result<CoxRule> {
    if !model.converged {
        return Err(Error::Fit("Cox model did not converge".into()));
    }
    if model.target != Target::Failure {
        return Err(Error::Config("cox_itr needs a failure-target Cox model".into()));
    }
    let d = model.dim;
    Ok(CoxRule { beta_a: model.coefficients[d], beta_ax: model.coefficients[d + 1..].to_vec() })
}
