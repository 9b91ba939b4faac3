//! Pairwise coordinate ascent on the weighted SVM dual.
//!
//! The solver works on the minimization form used by libsvm,
//! `min ½ αᵀQα − eᵀα` with `Q_ij = y_i y_j K_ij`, `yᵀα = 0` and
//! `0 ≤ α_i ≤ C_i`. Working pairs are the maximal violating pair.

use std::rc::Rc;

use serde::{Deserialize, Serialize};

use super::kernel::KernelSpec;
use super::rule::TreatmentRule;
use crate::dataset::Treatment;
use crate::error::{Error, Result};
use crate::rewards::WeightedClassificationProblem;

const TAU: f64 = 1e-12;
const GAP_TOL: f64 = 1e-3;
const MIN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    pub kkt_tol: f64,
    /// Iteration budget in sweeps; one sweep is one pair update per active sample.
    pub max_passes: usize,
    /// Problems with at most this many active samples use a dense `Q`;
    /// larger ones keep this many kernel rows in an LRU cache.
    pub cache_size: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self { kkt_tol: 1e-3, max_passes: 10_000, cache_size: 2048 }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.kkt_tol > 0.0) {
            return Err(Error::Config(format!("kkt_tol must be positive, got {}", self.kkt_tol)));
        }
        if self.max_passes == 0 {
            return Err(Error::Config("max_passes must be at least 1".into()));
        }
        if self.cache_size < 2 {
            return Err(Error::Config("cache_size must be at least 2".into()));
        }
        Ok(())
    }
}

/// Solver output. `alpha` and `upper` are indexed like the input problem.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmFit {
    pub rule: TreatmentRule,
    pub alpha: Vec<f64>,
    pub upper: Vec<f64>,
    pub dual_objective: f64,
    pub kkt_violation: f64,
    pub iterations: usize,
    /// Dual objective at the start and after every sweep, ending with the final value.
    pub trace: Vec<f64>,
    /// Set when only one label carries positive weight.
    pub one_class: Option<Treatment>,
}

/// Box bounds `C_i = W_i / (2 n λ π_i)`.
pub fn box_bounds(problem: &WeightedClassificationProblem, lambda: f64) -> Vec<f64> {
    let n = problem.len() as f64;
    problem.weights.iter().zip(&problem.propensities).map(|(&w, &p)| w / (2.0 * n * lambda * p)).collect()
}

enum QStore<'k> {
    Dense { n: usize, data: Vec<f64> },
    Cached(RowCache<'k>),
}

struct RowCache<'k> {
    n: usize,
    entry: &'k dyn Fn(usize, usize) -> f64,
    y: Vec<f64>,
    rows: Vec<Option<Rc<[f64]>>>,
    stamp: Vec<u64>,
    clock: u64,
    live: usize,
    capacity: usize,
}

impl RowCache<'_> {
    fn row(&mut self, i: usize) -> Rc<[f64]> {
        self.clock += 1;
        self.stamp[i] = self.clock;
        if let Some(r) = &self.rows[i] {
            return r.clone();
        }
        if self.live >= self.capacity {
            let victim = (0..self.n)
                .filter(|&k| self.rows[k].is_some() && k != i)
                .min_by_key(|&k| self.stamp[k])
                .expect("cache holds at least one row");
            self.rows[victim] = None;
            self.live -= 1;
        }
        let yi = self.y[i];
        let row: Rc<[f64]> = (0..self.n).map(|j| yi * self.y[j] * (self.entry)(i, j)).collect::<Vec<_>>().into();
        self.rows[i] = Some(row.clone());
        self.live += 1;
        row
    }
}

enum Row<'a> {
    Slice(&'a [f64]),
    Shared(Rc<[f64]>),
}

impl std::ops::Deref for Row<'_> {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        match self {
            Row::Slice(s) => s,
            Row::Shared(r) => r,
        }
    }
}

impl<'k> QStore<'k> {
    fn new(entry: &'k dyn Fn(usize, usize) -> f64, y: &[f64], cache_size: usize) -> Self {
        let n = y.len();
        if n <= cache_size {
            let mut data = vec![0.0; n * n];
            for i in 0..n {
                for j in i..n {
                    let v = y[i] * y[j] * entry(i, j);
                    data[i * n + j] = v;
                    data[j * n + i] = v;
                }
            }
            QStore::Dense { n, data }
        } else {
            QStore::Cached(RowCache {
                n,
                entry,
                y: y.to_vec(),
                rows: vec![None; n],
                stamp: vec![0; n],
                clock: 0,
                live: 0,
                capacity: cache_size,
            })
        }
    }

    fn row(&mut self, i: usize) -> Row<'_> {
        match self {
            QStore::Dense { n, data } => Row::Slice(&data[i * *n..(i + 1) * *n]),
            QStore::Cached(c) => Row::Shared(c.row(i)),
        }
    }

    fn pair(&mut self, i: usize, j: usize) -> (Row<'_>, Row<'_>) {
        match self {
            QStore::Dense { n, data } => {
                (Row::Slice(&data[i * *n..(i + 1) * *n]), Row::Slice(&data[j * *n..(j + 1) * *n]))
            }
            QStore::Cached(c) => {
                let ri = c.row(i);
                (Row::Shared(ri), Row::Shared(c.row(j)))
            }
        }
    }
}

/// Fits the weighted SVM on `problem` with penalty `lambda`.
pub fn solve_dual(
    problem: &WeightedClassificationProblem,
    lambda: f64,
    kernel: &KernelSpec,
    params: &SolverParams,
) -> Result<SvmFit> {
    let xs = &problem.features;
    let entry = |i: usize, j: usize| kernel.eval(&xs[i], &xs[j]);
    solve_dual_with(problem, lambda, kernel, params, &entry, None)
}

/// Core solver. `entry(i, j)` returns `K(x_i, x_j)` for problem rows;
/// `warm` is a feasible starting point for the same bounds.
pub(crate) fn solve_dual_with(
    problem: &WeightedClassificationProblem,
    lambda: f64,
    kernel: &KernelSpec,
    params: &SolverParams,
    entry: &(dyn Fn(usize, usize) -> f64 + Sync),
    warm: Option<&[f64]>,
) -> Result<SvmFit> {
    params.validate()?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Config(format!("lambda must be positive, got {lambda}")));
    }
    if problem.is_empty() {
        return Err(Error::Domain("empty classification problem".into()));
    }
    let n = problem.len();
    let upper_full = box_bounds(problem, lambda);
    let active: Vec<usize> = (0..n).filter(|&i| upper_full[i] > 0.0).collect();

    let has = |t: Treatment| active.iter().any(|&i| problem.labels[i] == t);
    let (plus, minus) = (has(Treatment::Plus), has(Treatment::Minus));
    if !(plus && minus) {
        let class = if minus { Treatment::Minus } else { Treatment::Plus };
        log::warn!("event=one_class_problem class={class} active={}", active.len());
        return Ok(SvmFit {
            rule: TreatmentRule::constant(*kernel, class, lambda),
            alpha: vec![0.0; n],
            upper: upper_full,
            dual_objective: 0.0,
            kkt_violation: 0.0,
            iterations: 0,
            trace: vec![0.0],
            one_class: Some(class),
        });
    }

    let m = active.len();
    let y: Vec<f64> = active.iter().map(|&i| problem.labels[i].value()).collect();
    let c: Vec<f64> = active.iter().map(|&i| upper_full[i]).collect();
    let sub = |i: usize, j: usize| entry(active[i], active[j]);
    let mut q = QStore::new(&sub, &y, params.cache_size);
    let qd: Vec<f64> = (0..m).map(|i| entry(active[i], active[i])).collect();

    let mut alpha: Vec<f64> = match warm {
        Some(w) => active.iter().enumerate().map(|(k, &i)| w[i].clamp(0.0, c[k])).collect(),
        None => vec![0.0; m],
    };
    let mut grad = vec![-1.0; m];
    for i in 0..m {
        if alpha[i] != 0.0 {
            let row = q.row(i);
            for (g, &qij) in grad.iter_mut().zip(row.iter()) {
                *g += alpha[i] * qij;
            }
        }
    }

    let dual =
        |alpha: &[f64], grad: &[f64]| -> f64 { 0.5 * alpha.iter().zip(grad).map(|(a, g)| a * (1.0 - g)).sum::<f64>() };
    let mut trace = vec![dual(&alpha, &grad)];
    let max_iter = params.max_passes.saturating_mul(m.max(1));
    let mut iter = 0usize;
    let violation;
    // Large boxes amplify a small KKT residual in the primal, so the
    // tolerance tightens until the duality gap is small as well.
    let mut tol = params.kkt_tol;

    loop {
        let (i, j, gap) = select_pair(&alpha, &grad, &y, &c);
        if i.is_none() || gap <= tol && (tol <= MIN_TOL || relative_gap(&alpha, &grad, &y, &c) <= GAP_TOL) {
            violation = gap.max(0.0);
            break;
        }
        if gap <= tol {
            tol = (tol * 0.1).max(MIN_TOL);
            continue;
        }
        if iter >= max_iter && tol < params.kkt_tol && gap <= params.kkt_tol {
            log::debug!("event=smo_refine_budget violation={gap:.3e}");
            violation = gap;
            break;
        }
        if iter >= max_iter {
            let mut best = vec![0.0; n];
            for (k, &idx) in active.iter().enumerate() {
                best[idx] = alpha[k];
            }
            return Err(Error::NotConverged { stage: "smo", iterations: iter, residual: gap, best });
        }
        let (i, j) = (i.unwrap(), j.unwrap());
        let (qi, qj) = q.pair(i, j);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        update_pair(i, j, &mut alpha, &grad, &y, &c, qd[i], qd[j], qi[j]);
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for k in 0..m {
            grad[k] += qi[k] * di + qj[k] * dj;
        }
        iter += 1;
        if iter.is_multiple_of(m) {
            trace.push(dual(&alpha, &grad));
        }
    }

    let dual_objective = dual(&alpha, &grad);
    trace.push(dual_objective);
    let rho = compute_rho(&alpha, &grad, &y, &c);

    let mut alpha_full = vec![0.0; n];
    let mut support = Vec::new();
    let mut coefficients = Vec::new();
    for (k, &idx) in active.iter().enumerate() {
        alpha_full[idx] = alpha[k];
        if alpha[k] > 0.0 {
            support.push(problem.features[idx].clone());
            coefficients.push(alpha[k] * y[k]);
        }
    }
    log::debug!("event=smo_done n_active={m} iterations={iter} violation={violation:.3e} sv={}", support.len());
    Ok(SvmFit {
        rule: TreatmentRule::new(*kernel, support, coefficients, -rho, lambda),
        alpha: alpha_full,
        upper: upper_full,
        dual_objective,
        kkt_violation: violation,
        iterations: iter,
        trace,
        one_class: None,
    })
}

#[inline]
fn in_up(a: f64, y: f64, c: f64) -> bool {
    if y > 0.0 {
        a < c
    } else {
        a > 0.0
    }
}

#[inline]
fn in_low(a: f64, y: f64, c: f64) -> bool {
    if y > 0.0 {
        a > 0.0
    } else {
        a < c
    }
}

/// Maximal violating pair and the violation `m(α) − M(α)`.
fn select_pair(alpha: &[f64], grad: &[f64], y: &[f64], c: &[f64]) -> (Option<usize>, Option<usize>, f64) {
    let mut gmax = f64::NEG_INFINITY;
    let mut gmin = f64::INFINITY;
    let (mut bi, mut bj) = (None, None);
    for t in 0..alpha.len() {
        let v = -y[t] * grad[t];
        if in_up(alpha[t], y[t], c[t]) && v > gmax {
            gmax = v;
            bi = Some(t);
        }
        if in_low(alpha[t], y[t], c[t]) && v < gmin {
            gmin = v;
            bj = Some(t);
        }
    }
    if bi.is_none() || bj.is_none() {
        return (None, None, 0.0);
    }
    (bi, bj, gmax - gmin)
}

/// Two-variable subproblem with clipping to the box, as in libsvm.
#[allow(clippy::too_many_arguments)]
fn update_pair(
    i: usize,
    j: usize,
    alpha: &mut [f64],
    grad: &[f64],
    y: &[f64],
    c: &[f64],
    qii: f64,
    qjj: f64,
    qij: f64,
) {
    let (ci, cj) = (c[i], c[j]);
    if y[i] != y[j] {
        let mut quad = qii + qjj + 2.0 * qij;
        if quad <= 0.0 {
            quad = TAU;
        }
        let delta = (-grad[i] - grad[j]) / quad;
        let diff = alpha[i] - alpha[j];
        alpha[i] += delta;
        alpha[j] += delta;
        if diff > 0.0 {
            if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = diff;
            }
        } else if alpha[i] < 0.0 {
            alpha[i] = 0.0;
            alpha[j] = -diff;
        }
        if diff > ci - cj {
            if alpha[i] > ci {
                alpha[i] = ci;
                alpha[j] = ci - diff;
            }
        } else if alpha[j] > cj {
            alpha[j] = cj;
            alpha[i] = cj + diff;
        }
    } else {
        let mut quad = qii + qjj - 2.0 * qij;
        if quad <= 0.0 {
            quad = TAU;
        }
        let delta = (grad[i] - grad[j]) / quad;
        let sum = alpha[i] + alpha[j];
        alpha[i] -= delta;
        alpha[j] += delta;
        if sum > ci {
            if alpha[i] > ci {
                alpha[i] = ci;
                alpha[j] = sum - ci;
            }
        } else if alpha[j] < 0.0 {
            alpha[j] = 0.0;
            alpha[i] = sum;
        }
        if sum > cj {
            if alpha[j] > cj {
                alpha[j] = cj;
                alpha[i] = sum - cj;
            }
        } else if alpha[i] < 0.0 {
            alpha[i] = 0.0;
            alpha[j] = sum;
        }
    }
}

/// Relative primal-dual gap from the gradient alone, with the bias of [`compute_rho`].
fn relative_gap(alpha: &[f64], grad: &[f64], y: &[f64], c: &[f64]) -> f64 {
    let b = -compute_rho(alpha, grad, y, c);
    // (Qα)_k = grad_k + 1 = y_k (f(x_k) − b)
    let quad: f64 = alpha.iter().zip(grad).map(|(a, g)| a * (g + 1.0)).sum();
    let sum: f64 = alpha.iter().sum();
    let hinge: f64 = (0..alpha.len()).map(|k| c[k] * (1.0 - (grad[k] + 1.0) - y[k] * b).max(0.0)).sum();
    let primal = 0.5 * quad + hinge;
    let dual = sum - 0.5 * quad;
    (primal - dual) / primal.abs().max(dual.abs()).max(1e-12)
}

fn compute_rho(alpha: &[f64], grad: &[f64], y: &[f64], c: &[f64]) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut sum_free = 0.0;
    let mut n_free = 0usize;
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        let at_upper = alpha[t] >= c[t];
        let at_lower = alpha[t] <= 0.0;
        if at_upper {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if at_lower {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    if n_free > 0 {
        sum_free / n_free as f64
    } else if ub.is_finite() && lb.is_finite() {
        (ub + lb) / 2.0
    } else if ub.is_finite() {
        ub
    } else if lb.is_finite() {
        lb
    } else {
        0.0
    }
}

/// `½‖f‖² + Σ C_i max(0, 1 − y_i f(x_i))` for the solver's own iterate.
pub fn primal_objective(problem: &WeightedClassificationProblem, fit: &SvmFit, kernel: &KernelSpec) -> f64 {
    let n = problem.len();
    let xs = &problem.features;
    let ay: Vec<f64> = (0..n).map(|i| fit.alpha[i] * problem.labels[i].value()).collect();
    let sv: Vec<usize> = (0..n).filter(|&i| ay[i] != 0.0).collect();
    let mut norm2 = 0.0;
    for &i in &sv {
        for &j in &sv {
            norm2 += ay[i] * ay[j] * kernel.eval(&xs[i], &xs[j]);
        }
    }
    let hinge: f64 = (0..n)
        .filter(|&i| fit.upper[i] > 0.0)
        .map(|i| {
            let f = fit.rule.decision_value(&xs[i]);
            fit.upper[i] * (1.0 - problem.labels[i].value() * f).max(0.0)
        })
        .sum();
    0.5 * norm2 + hinge
}

/// Dual objective `Σα − ½ αᵀQα` evaluated directly.
pub fn dual_objective(problem: &WeightedClassificationProblem, alpha: &[f64], kernel: &KernelSpec) -> f64 {
    let n = problem.len();
    let xs = &problem.features;
    let mut quad = 0.0;
    for i in 0..n {
        if alpha[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            if alpha[j] == 0.0 {
                continue;
            }
            quad += alpha[i]
                * alpha[j]
                * problem.labels[i].value()
                * problem.labels[j].value()
                * kernel.eval(&xs[i], &xs[j]);
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem(xs: &[f64], labels: &[Treatment], w: &[f64]) -> WeightedClassificationProblem {
        WeightedClassificationProblem {
            features: xs.iter().map(|&x| vec![x]).collect(),
            labels: labels.to_vec(),
            weights: w.to_vec(),
            propensities: vec![0.5; xs.len()],
            offset: 0.0,
        }
    }

    #[test]
    fn two_point_analytic() {
        // C_i = 1 / (2 * 2 * λ * 0.5) = 1/(2λ); with λ = 0.5, C = 1 > 0.5.
        let p = problem(&[1.0, -1.0], &[Treatment::Plus, Treatment::Minus], &[1.0, 1.0]);
        let fit = solve_dual(&p, 0.5, &KernelSpec::Linear, &SolverParams::default()).unwrap();
        assert!((fit.alpha[0] - 0.5).abs() < 1e-6, "{:?}", fit.alpha);
        assert!((fit.alpha[1] - 0.5).abs() < 1e-6);
        assert!(fit.rule.bias().abs() < 1e-6);
        assert!((fit.dual_objective - 0.5).abs() < 1e-9);
        assert_eq!(fit.rule.decide(&[0.5]), Treatment::Plus);
        assert_eq!(fit.rule.decide(&[-0.5]), Treatment::Minus);
    }

    #[test]
    fn two_point_bound_active() {
        // C = 1/(2λ) = 0.4 < 0.5, so α = (0.4, 0.4) and the dual is 2C − 2C².
        let p = problem(&[1.0, -1.0], &[Treatment::Plus, Treatment::Minus], &[1.0, 1.0]);
        let fit = solve_dual(&p, 1.25, &KernelSpec::Linear, &SolverParams::default()).unwrap();
        assert!((fit.alpha[0] - 0.4).abs() < 1e-9);
        assert!((fit.alpha[1] - 0.4).abs() < 1e-9);
        assert!((fit.dual_objective - (0.8 - 0.32)).abs() < 1e-9);
        assert!(fit.rule.bias().abs() < 1e-9);
    }

    #[test]
    fn zero_weights_excluded() {
        let p = problem(
            &[2.0, -3.0, 0.5, -0.1],
            &[Treatment::Plus, Treatment::Minus, Treatment::Minus, Treatment::Plus],
            &[1.0, 1.0, 0.0, 0.0],
        );
        let fit = solve_dual(&p, 0.01, &KernelSpec::Linear, &SolverParams::default()).unwrap();
        assert_eq!(fit.alpha[2], 0.0);
        assert_eq!(fit.alpha[3], 0.0);
        // hard margin between 2 and -3: w = 2/5, boundary at -0.5
        let boundary = -fit.rule.bias()
            / fit.rule.coefficients().iter().zip(fit.rule.support_points()).map(|(c, s)| c * s[0]).sum::<f64>();
        assert!((boundary + 0.5).abs() < 1e-3, "{boundary}");
        let a = 2.0 / 25.0;
        assert!((fit.dual_objective - (2.0 * a - 0.5 * a * a * 25.0)).abs() < 1e-6);
    }

    #[test]
    fn one_class_returns_constant() {
        let p = problem(&[1.0, 2.0], &[Treatment::Minus, Treatment::Plus], &[1.0, 0.0]);
        let fit = solve_dual(&p, 0.1, &KernelSpec::Linear, &SolverParams::default()).unwrap();
        assert_eq!(fit.one_class, Some(Treatment::Minus));
        assert_eq!(fit.rule.decide(&[100.0]), Treatment::Minus);
    }

    #[test]
    fn cached_matches_dense() {
        let xs: Vec<f64> = (0..30).map(|i| (i as f64 * 0.73).sin() * 2.0).collect();
        let labels: Vec<Treatment> = (0..30).map(|i| Treatment::from_sign((i as f64 * 1.7).cos())).collect();
        let w: Vec<f64> = (0..30).map(|i| 0.5 + (i % 4) as f64).collect();
        let p = problem(&xs, &labels, &w);
        let k = KernelSpec::gaussian(0.8).unwrap();
        let dense = solve_dual(&p, 0.05, &k, &SolverParams::default()).unwrap();
        let cached = solve_dual(&p, 0.05, &k, &SolverParams { cache_size: 4, ..SolverParams::default() }).unwrap();
        assert_eq!(dense.alpha, cached.alpha);
        assert_eq!(dense.rule, cached.rule);
    }

    #[test]
    fn invalid_inputs() {
        let p = problem(&[1.0, -1.0], &[Treatment::Plus, Treatment::Minus], &[1.0, 1.0]);
        assert!(matches!(solve_dual(&p, 0.0, &KernelSpec::Linear, &SolverParams::default()), Err(Error::Config(_))));
        let bad = SolverParams { kkt_tol: 0.0, ..SolverParams::default() };
        assert!(solve_dual(&p, 1.0, &KernelSpec::Linear, &bad).is_err());
    }

    #[test]
    fn budget_exhaustion_reports_iterate() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 / 3.0).collect();
        let labels: Vec<Treatment> =
            (0..20).map(|i| if i % 3 == 0 { Treatment::Plus } else { Treatment::Minus }).collect();
        let p = problem(&xs, &labels, &[1.0; 20]);
        let params = SolverParams { max_passes: 1, kkt_tol: 1e-12, ..SolverParams::default() };
        match solve_dual(&p, 1e-4, &KernelSpec::gaussian(0.2).unwrap(), &params) {
            Err(Error::NotConverged { best, residual, .. }) => {
                assert_eq!(best.len(), 20);
                assert!(residual > 1e-12);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}
