//! Two-sample log-rank statistic.

use crate::error::{Error, Result};

/// Accumulates `(O - E)^2 / V` for group A over time-sorted observations.
///
/// `in_a[k]` flags membership of the k-th observation in group A.
pub(crate) fn logrank_sorted<T>(
    sorted: &[T],
    time: impl Fn(&T) -> f64,
    event: impl Fn(&T) -> bool,
    in_a: &[bool],
) -> f64 {
    debug_assert_eq!(sorted.len(), in_a.len());
    let mut at_risk = sorted.len() as f64;
    let mut at_risk_a = in_a.iter().filter(|&&b| b).count() as f64;
    let mut observed = 0.0;
    let mut expected = 0.0;
    let mut variance = 0.0;
    let mut k = 0;
    while k < sorted.len() {
        let t = time(&sorted[k]);
        let mut d = 0.0;
        let mut d_a = 0.0;
        let mut leave = 0.0;
        let mut leave_a = 0.0;
        while k < sorted.len() && time(&sorted[k]) == t {
            let a = in_a[k];
            if event(&sorted[k]) {
                d += 1.0;
                if a {
                    d_a += 1.0;
                }
            }
            leave += 1.0;
            if a {
                leave_a += 1.0;
            }
            k += 1;
        }
        if d > 0.0 {
            let frac = at_risk_a / at_risk;
            observed += d_a;
            expected += d * frac;
            if at_risk > 1.0 {
                variance += d * frac * (1.0 - frac) * (at_risk - d) / (at_risk - 1.0);
            }
        }
        at_risk -= leave;
        at_risk_a -= leave_a;
    }
    if variance <= 1e-12 {
        0.0
    } else {
        (observed - expected).powi(2) / variance
    }
}

/// Squared standardized log-rank statistic comparing two samples.
///
/// Degenerate inputs (zero variance) score 0.
pub fn logrank_statistic(group_a: (&[f64], &[bool]), group_b: (&[f64], &[bool])) -> Result<f64> {
    let (ta, ea) = group_a;
    let (tb, eb) = group_b;
    if ta.len() != ea.len() || tb.len() != eb.len() {
        return Err(Error::Domain("times and events differ in length".into()));
    }
    if ta.is_empty() || tb.is_empty() {
        return Err(Error::Domain("log-rank needs two nonempty groups".into()));
    }
    let mut pooled: Vec<(f64, bool, bool)> =
        ta.iter().zip(ea).map(|(&t, &e)| (t, e, true)).chain(tb.iter().zip(eb).map(|(&t, &e)| (t, e, false))).collect();
    pooled.sort_by(|a, b| a.0.total_cmp(&b.0));
    let in_a: Vec<bool> = pooled.iter().map(|p| p.2).collect();
    Ok(logrank_sorted(&pooled, |p| p.0, |p| p.1, &in_a))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Textbook log-rank computed with explicit risk-set filtering.
    fn oracle(ta: &[f64], ea: &[bool], tb: &[f64], eb: &[bool]) -> f64 {
        let mut times: Vec<f64> =
            ta.iter().zip(ea).chain(tb.iter().zip(eb)).filter(|(_, &e)| e).map(|(&t, _)| t).collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        let (mut o, mut e, mut v) = (0.0, 0.0, 0.0);
        for &s in &times {
            let na = ta.iter().filter(|&&t| t >= s).count() as f64;
            let nb = tb.iter().filter(|&&t| t >= s).count() as f64;
            let da = ta.iter().zip(ea).filter(|(&t, &ev)| ev && t == s).count() as f64;
            let db = tb.iter().zip(eb).filter(|(&t, &ev)| ev && t == s).count() as f64;
            let n = na + nb;
            let d = da + db;
            o += da;
            e += d * na / n;
            if n > 1.0 {
                v += d * (na / n) * (nb / n) * (n - d) / (n - 1.0);
            }
        }
        if v <= 1e-12 {
            0.0
        } else {
            (o - e).powi(2) / v
        }
    }

    #[test]
    fn identical_groups_score_zero() {
        let t = [1.0, 2.0, 3.0, 4.0];
        let e = [true, false, true, true];
        assert!(logrank_statistic((&t, &e), (&t, &e)).unwrap().abs() < 1e-12);
    }

    #[test]
    fn separated_groups_match_hand_value() {
        let ta = [1.0; 5];
        let tb = [2.0; 5];
        let e = [true; 5];
        let got = logrank_statistic((&ta, &e), (&tb, &e)).unwrap();
        // O-E = 5 - 2.5, V = 5 * 0.25 * 5 / 9 at t=1 and nothing at t=2
        assert!((got - 9.0).abs() < 1e-12);
        assert!((got - oracle(&ta, &e, &tb, &e)).abs() < 1e-12);
    }

    #[test]
    fn censored_group_matches_oracle() {
        let ta = [0.5, 1.2, 2.2, 3.1];
        let ea = [false; 4];
        let tb = [0.3, 0.9, 1.2, 2.0, 2.8];
        let eb = [true, true, false, true, true];
        let got = logrank_statistic((&ta, &ea), (&tb, &eb)).unwrap();
        let want = oracle(&ta, &ea, &tb, &eb);
        assert!(got.is_finite() && got > 0.0);
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn empty_group_rejected() {
        assert!(logrank_statistic((&[], &[]), (&[1.0], &[true])).is_err());
    }

    proptest::proptest! {
        #[test]
        fn matches_oracle_on_random_samples(
            a in proptest::collection::vec((1u8..20, proptest::bool::ANY), 1..15),
            b in proptest::collection::vec((1u8..20, proptest::bool::ANY), 1..15),
        ) {
            let ta: Vec<f64> = a.iter().map(|p| p.0 as f64).collect();
            let ea: Vec<bool> = a.iter().map(|p| p.1).collect();
            let tb: Vec<f64> = b.iter().map(|p| p.0 as f64).collect();
            let eb: Vec<bool> = b.iter().map(|p| p.1).collect();
            let got = logrank_statistic((&ta, &ea), (&tb, &eb)).unwrap();
            let want = oracle(&ta, &ea, &tb, &eb);
            proptest::prop_assert!((got - want).abs() <= 1e-9 * want.max(1.0));
        }
    }
}
