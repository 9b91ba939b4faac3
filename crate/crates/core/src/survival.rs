//! Right-continuous step functions, the Nelson-Aalen estimator and exact
//! integrals of survival curves.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower bound applied to every survival probability.
pub const SURVIVAL_FLOOR: f64 = 1e-12;

/// Right-continuous piecewise-constant function.
///
/// `eval(t)` returns the value attached to the last knot `<= t`, or
/// `baseline` when `t` precedes the first knot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFunction {
    knots: Vec<f64>,
    values: Vec<f64>,
    baseline: f64,
}

impl StepFunction {
    pub fn new(knots: Vec<f64>, values: Vec<f64>, baseline: f64) -> Result<Self> {
        if knots.len() != values.len() {
            return Err(Error::Invariant(format!(
                "step function has {} knots but {} values",
                knots.len(),
                values.len()
            )));
        }
        if knots.iter().chain(values.iter()).any(|v| !v.is_finite()) || !baseline.is_finite() {
            return Err(Error::Invariant("step function entries must be finite".into()));
        }
        if knots.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invariant("step function knots must be strictly increasing".into()));
        }
        Ok(Self { knots, values, baseline })
    }

    pub fn constant(value: f64) -> Self {
        Self { knots: Vec::new(), values: Vec::new(), baseline: value }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn baseline(&self) -> f64 {
        self.baseline
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self.knots.partition_point(|&k| k <= t) {
            0 => self.baseline,
            i => self.values[i - 1],
        }
    }

    /// Value just before `t` (the left limit).
    pub fn eval_left(&self, t: f64) -> f64 {
        match self.knots.partition_point(|&k| k < t) {
            0 => self.baseline,
            i => self.values[i - 1],
        }
    }

    /// Exact integral over `[from, to]`; zero when `to <= from`.
    pub fn integrate(&self, from: f64, to: f64) -> f64 {
        if to <= from {
            return 0.0;
        }
        let mut total = 0.0;
        let mut left = from;
        let mut current = self.eval(from);
        let start = self.knots.partition_point(|&k| k <= from);
        for (&knot, &value) in self.knots[start..].iter().zip(&self.values[start..]) {
            if knot >= to {
                break;
            }
            total += current * (knot - left);
            left = knot;
            current = value;
        }
        total + current * (to - left)
    }

    pub fn is_nondecreasing(&self) -> bool {
        let mut prev = self.baseline;
        for &v in &self.values {
            if v < prev {
                return false;
            }
            prev = v;
        }
        true
    }

    /// Pointwise mean of several step functions over the union of their knots.
    pub fn average(functions: &[&StepFunction]) -> StepFunction {
        if functions.is_empty() {
            return StepFunction::zero();
        }
        if functions.len() == 1 {
            return functions[0].clone();
        }
        let m = functions.len() as f64;
        let baseline = functions.iter().map(|f| f.baseline).sum::<f64>() / m;
        let mut jumps: Vec<(f64, f64)> = Vec::with_capacity(functions.iter().map(|f| f.len()).sum());
        for f in functions {
            let mut prev = f.baseline;
            for (&k, &v) in f.knots.iter().zip(&f.values) {
                jumps.push((k, (v - prev) / m));
                prev = v;
            }
        }
        jumps.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut knots = Vec::with_capacity(jumps.len());
        let mut values = Vec::with_capacity(jumps.len());
        let mut level = baseline;
        for (k, inc) in jumps {
            level += inc;
            if knots.last() == Some(&k) {
                *values.last_mut().unwrap() = level;
            } else {
                knots.push(k);
                values.push(level);
            }
        }
        StepFunction { knots, values, baseline }
    }
}

/// Survival function on `[origin, tau]` stored as a step function.
///
/// `origin` is the lower end of the time axis: `0` for natural times, and any
/// value below the first knot for log-times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalCurve {
    s: StepFunction,
    tau: f64,
    origin: f64,
}

impl SurvivalCurve {
    pub fn new(s: StepFunction, tau: f64) -> Result<Self> {
        Self::with_origin(s, tau, 0.0)
    }

    pub fn with_origin(s: StepFunction, tau: f64, origin: f64) -> Result<Self> {
        if !(tau.is_finite() && origin.is_finite() && origin < tau) {
            return Err(Error::Invariant(format!("survival curve needs origin < tau, got origin={origin}, tau={tau}")));
        }
        if s.baseline != 1.0 {
            return Err(Error::Invariant("survival curve must start at 1".into()));
        }
        let mut prev = 1.0;
        for &v in &s.values {
            if v > prev || v <= 0.0 {
                return Err(Error::Invariant("survival values must be nonincreasing and positive".into()));
            }
            prev = v;
        }
        Ok(Self { s, tau, origin })
    }

    pub fn one(tau: f64) -> Self {
        Self { s: StepFunction::constant(1.0), tau, origin: 0.0_f64.min(tau - 1.0) }
    }

    pub fn step(&self) -> &StepFunction {
        &self.s
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.s.eval(t)
    }
}

fn check_times(times: &[f64], events: &[bool], allow_negative: bool) -> Result<()> {
    if times.is_empty() {
        return Err(Error::Domain("Nelson-Aalen needs at least one observation".into()));
    }
    if times.len() != events.len() {
        return Err(Error::Domain(format!("{} times but {} event flags", times.len(), events.len())));
    }
    for &t in times {
        if !t.is_finite() {
            return Err(Error::Domain(format!("non-finite time {t}")));
        }
        if !allow_negative && t < 0.0 {
            return Err(Error::Domain(format!("negative time {t}")));
        }
    }
    Ok(())
}

/// Nelson-Aalen cumulative hazard `sum_{s <= t} d_s / n_s` over distinct
/// event times, tied events aggregated into one jump.
pub fn nelson_aalen(times: &[f64], events: &[bool]) -> Result<StepFunction> {
    check_times(times, events, false)?;
    Ok(nelson_aalen_unchecked(times, events))
}

/// Same estimator for transformed (e.g. log) time axes, where negative
/// values are legitimate.
pub fn nelson_aalen_any_axis(times: &[f64], events: &[bool]) -> Result<StepFunction> {
    check_times(times, events, true)?;
    Ok(nelson_aalen_unchecked(times, events))
}

pub(crate) fn nelson_aalen_unchecked(times: &[f64], events: &[bool]) -> StepFunction {
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
    nelson_aalen_sorted(order.iter().map(|&i| (times[i], events[i])))
}

/// Nelson-Aalen over observations already sorted by time.
pub(crate) fn nelson_aalen_sorted<I>(sorted: I) -> StepFunction
where
    I: IntoIterator<Item = (f64, bool)>,
    I::IntoIter: ExactSizeIterator,
{
    let it = sorted.into_iter();
    let mut at_risk = it.len();
    let mut knots = Vec::new();
    let mut values = Vec::new();
    let mut cum = 0.0;
    let mut it = it.peekable();
    while let Some((t, e)) = it.next() {
        let mut deaths = usize::from(e);
        let mut leaving = 1;
        while let Some(&(t2, e2)) = it.peek() {
            if t2 != t {
                break;
            }
            deaths += usize::from(e2);
            leaving += 1;
            it.next();
        }
        if deaths > 0 {
            cum += deaths as f64 / at_risk as f64;
            knots.push(t);
            values.push(cum);
        }
        at_risk -= leaving;
    }
    StepFunction { knots, values, baseline: 0.0 }
}

/// `S(t) = max(exp(-Lambda(t)), floor)`.
pub fn hazard_to_survival(lambda: &StepFunction, tau: f64) -> Result<SurvivalCurve> {
    hazard_to_survival_on(lambda, tau, 0.0)
}

/// As [`hazard_to_survival`] on a time axis starting at `origin`.
pub fn hazard_to_survival_on(lambda: &StepFunction, tau: f64, origin: f64) -> Result<SurvivalCurve> {
    if lambda.baseline != 0.0 {
        return Err(Error::Invariant("cumulative hazard must start at 0".into()));
    }
    if !lambda.is_nondecreasing() {
        return Err(Error::Invariant("cumulative hazard must be nondecreasing".into()));
    }
    let values = lambda.values.iter().map(|&l| (-l).exp().max(SURVIVAL_FLOOR)).collect();
    let s = StepFunction { knots: lambda.knots.clone(), values, baseline: 1.0 };
    SurvivalCurve::with_origin(s, tau, origin)
}

/// `origin + int_origin^tau S(t) dt`, i.e. the mean of `min(T, tau)`.
pub fn restricted_mean(s: &SurvivalCurve) -> f64 {
    s.origin + s.s.integrate(s.origin, s.tau)
}

/// Mean of `min(T, tau)` given `T > y`: `y + int_y^tau S(t)/S(y) dt`.
pub fn conditional_restricted_mean(s: &SurvivalCurve, y: f64) -> Result<f64> {
    if y >= s.tau {
        log::debug!("event=degenerate_conditional_mean y={y} tau={}", s.tau);
        return Ok(s.tau);
    }
    let sy = s.eval(y);
    if sy <= SURVIVAL_FLOOR {
        return Err(Error::Numeric(format!("survival at conditioning time {y} is at the floor")));
    }
    Ok(y + s.s.integrate(y, s.tau) / sy)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags(e: &[u8]) -> Vec<bool> {
        e.iter().map(|&v| v == 1).collect()
    }

    fn two_step() -> SurvivalCurve {
        let s = StepFunction::new(vec![1.0, 2.0], vec![0.5, 0.25], 1.0).unwrap();
        SurvivalCurve::new(s, 2.5).unwrap()
    }

    #[test]
    fn nelson_aalen_no_events_is_zero() {
        let h = nelson_aalen(&[1.0, 2.0, 3.0], &flags(&[0, 0, 0])).unwrap();
        assert!(h.is_empty());
        assert_eq!(h.eval(10.0), 0.0);
    }

    #[test]
    fn nelson_aalen_hand_values() {
        let h = nelson_aalen(&[1.0, 2.0, 3.0], &flags(&[1, 0, 1])).unwrap();
        assert_eq!(h.knots(), &[1.0, 3.0]);
        assert!((h.eval(1.0) - 1.0 / 3.0).abs() < 1e-12);
        assert!((h.eval(2.5) - 1.0 / 3.0).abs() < 1e-12);
        assert!((h.eval(3.0) - 4.0 / 3.0).abs() < 1e-12);
        assert_eq!(h.eval(0.99), 0.0);
    }

    #[test]
    fn nelson_aalen_ties() {
        let h = nelson_aalen(&[1.0, 1.0, 2.0], &flags(&[1, 1, 1])).unwrap();
        assert!((h.eval(1.0) - 2.0 / 3.0).abs() < 1e-12);
        assert!((h.eval(2.0) - 5.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn nelson_aalen_errors() {
        assert!(matches!(nelson_aalen(&[], &[]), Err(Error::Domain(_))));
        assert!(matches!(nelson_aalen(&[-1.0, 2.0], &[true, true]), Err(Error::Domain(_))));
        // negative log-times are fine on a transformed axis
        assert!(nelson_aalen_any_axis(&[-1.0, 2.0], &[true, true]).is_ok());
    }

    #[test]
    fn survival_from_hazard() {
        let s = hazard_to_survival(&StepFunction::zero(), 3.0).unwrap();
        assert_eq!(s.eval(2.0), 1.0);
        let h = nelson_aalen(&[1.0, 2.0, 3.0], &flags(&[1, 0, 1])).unwrap();
        let s = hazard_to_survival(&h, 4.0).unwrap();
        assert!((s.eval(0.5) - 1.0).abs() < 1e-15);
        assert!((s.eval(1.0) - (-1.0f64 / 3.0).exp()).abs() < 1e-12);
        assert!((s.eval(3.0) - (-4.0f64 / 3.0).exp()).abs() < 1e-12);
        assert!((s.eval(1.0) - 0.71653).abs() < 1e-5);
        assert!((s.eval(3.0) - 0.26360).abs() < 1e-5);
    }

    #[test]
    fn decreasing_hazard_rejected() {
        let h = StepFunction::new(vec![1.0, 2.0], vec![1.0, 0.5], 0.0).unwrap();
        assert!(matches!(hazard_to_survival(&h, 3.0), Err(Error::Invariant(_))));
    }

    #[test]
    fn restricted_mean_rectangles() {
        assert_eq!(restricted_mean(&SurvivalCurve::one(2.5)), 2.5);
        assert!((restricted_mean(&two_step()) - 1.625).abs() < 1e-12);
    }

    #[test]
    fn conditional_mean_examples() {
        let one = SurvivalCurve::one(2.0);
        assert!((conditional_restricted_mean(&one, 1.0).unwrap() - 2.0).abs() < 1e-12);

        let s = StepFunction::new(vec![1.0], vec![0.5], 1.0).unwrap();
        let c = SurvivalCurve::new(s, 2.0).unwrap();
        // 0.5 + (0.5 * 1 + 1.0 * 0.5) / 1
        assert!((conditional_restricted_mean(&c, 0.5).unwrap() - 1.5).abs() < 1e-12);
        assert!((conditional_restricted_mean(&c, 1.5).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(conditional_restricted_mean(&c, 2.0).unwrap(), 2.0);
    }

    #[test]
    fn conditional_mean_at_floor_is_error() {
        let s = StepFunction::new(vec![1.0], vec![SURVIVAL_FLOOR], 1.0).unwrap();
        let c = SurvivalCurve::new(s, 2.0).unwrap();
        assert!(matches!(conditional_restricted_mean(&c, 1.5), Err(Error::Numeric(_))));
    }

    #[test]
    fn average_of_step_functions() {
        let a = StepFunction::new(vec![1.0, 3.0], vec![0.5, 1.0], 0.0).unwrap();
        let b = StepFunction::new(vec![2.0], vec![2.0], 0.0).unwrap();
        let c = StepFunction::new(vec![1.0, 2.0], vec![0.1, 0.4], 0.0).unwrap();
        let avg = StepFunction::average(&[&a, &b, &c]);
        for t in [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0] {
            let want = (a.eval(t) + b.eval(t) + c.eval(t)) / 3.0;
            assert!((avg.eval(t) - want).abs() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn integrate_partial_ranges() {
        let s = two_step();
        let f = s.step();
        assert!((f.integrate(0.5, 1.5) - (0.5 + 0.25)).abs() < 1e-12);
        assert_eq!(f.integrate(2.0, 2.0), 0.0);
        assert!((f.integrate(-1.0, 0.0) - 1.0).abs() < 1e-12);
    }
}
