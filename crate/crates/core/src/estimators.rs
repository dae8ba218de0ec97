//! Kaplan-Meier, censoring survival and the two-sample log-rank test.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Borrowed `(time, event)` columns of a patient group.
#[derive(Debug, Clone, Copy)]
pub struct Cohort<'a> {
    pub times: &'a [f64],
    pub events: &'a [bool],
}

impl<'a> Cohort<'a> {
    pub fn new(times: &'a [f64], events: &'a [bool]) -> Result<Self> {
        if times.len() != events.len() {
            return Err(Error::LengthMismatch(times.len(), events.len()));
        }
        if times.is_empty() {
            return Err(Error::Empty);
        }
        if times.iter().any(|t| t.is_nan()) {
            return Err(Error::InvalidArgument(alloc::string::String::from(
                "NaN time",
            )));
        }
        Ok(Self { times, events })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Indices ordered by time (stable on ties).
    pub fn time_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| self.times[a].total_cmp(&self.times[b]));
        order
    }
}

/// Right-continuous piecewise-constant function of time.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    knots: Vec<f64>,
    values: Vec<f64>,
    before: f64,
}

impl StepFunction {
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // rejects NaN too
    pub fn new(knots: Vec<f64>, values: Vec<f64>, value_before_first: f64) -> Result<Self> {
        if knots.len() != values.len() {
            return Err(Error::LengthMismatch(knots.len(), values.len()));
        }
        if knots.windows(2).any(|w| !(w[0] < w[1])) || knots.iter().any(|k| !k.is_finite()) {
            return Err(Error::InvalidArgument(alloc::string::String::from(
                "knots must be finite and strictly increasing",
            )));
        }
        Ok(Self {
            knots,
            values,
            before: value_before_first,
        })
    }

    pub fn constant(value: f64) -> Self {
        Self {
            knots: Vec::new(),
            values: Vec::new(),
            before: value,
        }
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value_before_first(&self) -> f64 {
        self.before
    }

    /// Value at the largest knot `<= t`.
    pub fn eval(&self, t: f64) -> f64 {
        match self.knots.partition_point(|&k| k <= t) {
            0 => self.before,
            i => self.values[i - 1],
        }
    }

    /// Left limit: value at the largest knot strictly below `t`.
    pub fn left_limit(&self, t: f64) -> f64 {
        match self.knots.partition_point(|&k| k < t) {
            0 => self.before,
            i => self.values[i - 1],
        }
    }

    /// Exact integral over `[t0, t1]`.
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN bounds give 0
    pub fn integral(&self, t0: f64, t1: f64) -> f64 {
        if !(t1 > t0) {
            return 0.0;
        }
        let mut acc = 0.0;
        let mut cur = t0;
        let mut value = self.eval(t0);
        let start = self.knots.partition_point(|&k| k <= t0);
        for (k, v) in self.knots[start..].iter().zip(&self.values[start..]) {
            if *k >= t1 {
                break;
            }
            acc += value * (k - cur);
            cur = *k;
            value = *v;
        }
        acc + value * (t1 - cur)
    }

    /// Smallest knot where the curve is at or below one half.
    pub fn median(&self) -> Option<f64> {
        if self.before <= 0.5 {
            return self.knots.first().copied();
        }
        self.knots
            .iter()
            .zip(&self.values)
            .find(|(_, &v)| v <= 0.5)
            .map(|(&k, _)| k)
    }
}

/// Product-limit estimate over `(time, event)` pairs already sorted by time.
pub(crate) fn km_sorted(pairs: impl Iterator<Item = (f64, bool)>, n: usize) -> StepFunction {
    let mut knots = Vec::new();
    let mut values = Vec::new();
    let mut s = 1.0;
    let mut removed = 0usize;
    let mut pairs = pairs.peekable();
    while let Some((t, e)) = pairs.next() {
        let mut d = usize::from(e);
        let mut block = 1usize;
        while let Some(&(t2, e2)) = pairs.peek() {
            if t2 != t {
                break;
            }
            d += usize::from(e2);
            block += 1;
            pairs.next();
        }
        let at_risk = n - removed;
        if d > 0 {
            s *= 1.0 - d as f64 / at_risk as f64;
            knots.push(t);
            values.push(s);
        }
        removed += block;
    }
    StepFunction {
        knots,
        values,
        before: 1.0,
    }
}

pub fn kaplan_meier(times: &[f64], events: &[bool]) -> Result<StepFunction> {
    let c = Cohort::new(times, events)?;
    let order = c.time_order();
    Ok(km_sorted(
        order.iter().map(|&i| (times[i], events[i])),
        times.len(),
    ))
}

/// Survival function of the censoring distribution, `G(t)`: Kaplan-Meier
/// with the event indicator flipped.
pub fn censoring_survival(times: &[f64], events: &[bool]) -> Result<StepFunction> {
    let flipped: Vec<bool> = events.iter().map(|e| !e).collect();
    kaplan_meier(times, &flipped)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRankResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Internal observed/expected sums of the two-sample log-rank test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRankSums {
    pub observed_a: f64,
    pub expected_a: f64,
    pub observed_b: f64,
    pub expected_b: f64,
    pub variance: f64,
}

impl LogRankSums {
    pub fn statistic(&self) -> f64 {
        if self.variance > 0.0 {
            let diff = self.observed_a - self.expected_a;
            diff * diff / self.variance
        } else {
            0.0
        }
    }
}

pub fn logrank_sums(a: Cohort<'_>, b: Cohort<'_>) -> LogRankSums {
    let mut all: Vec<(f64, bool, bool)> = Vec::with_capacity(a.len() + b.len());
    all.extend(a.times.iter().zip(a.events).map(|(&t, &e)| (t, e, true)));
    all.extend(b.times.iter().zip(b.events).map(|(&t, &e)| (t, e, false)));
    all.sort_by(|x, y| x.0.total_cmp(&y.0));

    let mut at_risk = all.len() as f64;
    let mut at_risk_a = a.len() as f64;
    let mut sums = LogRankSums {
        observed_a: 0.0,
        expected_a: 0.0,
        observed_b: 0.0,
        expected_b: 0.0,
        variance: 0.0,
    };
    let mut i = 0;
    while i < all.len() {
        let t = all[i].0;
        let (mut d, mut d_a, mut leave, mut leave_a) = (0.0, 0.0, 0.0, 0.0);
        while i < all.len() && all[i].0 == t {
            let (_, e, in_a) = all[i];
            leave += 1.0;
            if in_a {
                leave_a += 1.0;
            }
            if e {
                d += 1.0;
                if in_a {
                    d_a += 1.0;
                }
            }
            i += 1;
        }
        if d > 0.0 {
            let frac_a = at_risk_a / at_risk;
            sums.observed_a += d_a;
            sums.observed_b += d - d_a;
            sums.expected_a += d * frac_a;
            sums.expected_b += d * (1.0 - frac_a);
            if at_risk > 1.0 {
                sums.variance += d * frac_a * (1.0 - frac_a) * (at_risk - d) / (at_risk - 1.0);
            }
        }
        at_risk -= leave;
        at_risk_a -= leave_a;
    }
    sums
}

pub fn logrank_two_sample(a: Cohort<'_>, b: Cohort<'_>) -> Result<LogRankResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty);
    }
    let statistic = logrank_sums(a, b).statistic();
    Ok(LogRankResult {
        statistic,
        p_value: chi2_sf_1df(statistic),
    })
}

/// Upper tail of the chi-square distribution with one degree of freedom.
pub fn chi2_sf_1df(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    gamma_q(0.5, 0.5 * x)
}

/// Regularized upper incomplete gamma `Q(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_continued_fraction(a, x)
    }
}

fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut sum = 1.0 / a;
    let mut del = sum;
    for _ in 0..1000 {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * 1e-16 {
            break;
        }
    }
    sum * libm::exp(-x + a * libm::log(x) - libm::lgamma(a))
}

fn gamma_q_continued_fraction(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..1000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    libm::exp(-x + a * libm::log(x) - libm::lgamma(a)) * h
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn km_without_events_is_flat() {
        let s = kaplan_meier(&[1.0, 2.0, 3.0], &[false; 3]).unwrap();
        assert!(s.knots().is_empty());
        for t in [0.5, 1.0, 2.5, 100.0] {
            assert_eq!(s.eval(t), 1.0);
        }
    }

    #[test]
    fn km_hand_values() {
        let s = kaplan_meier(&[1.0, 2.0, 3.0], &[true; 3]).unwrap();
        assert!(close(s.eval(1.0), 2.0 / 3.0));
        assert!(close(s.eval(2.0), 1.0 / 3.0));
        assert!(close(s.eval(3.0), 0.0));
        assert_eq!(s.eval(0.99), 1.0);

        let s = kaplan_meier(&[1.0, 2.0, 3.0], &[true, false, true]).unwrap();
        assert!(close(s.eval(1.0), 2.0 / 3.0));
        assert!(close(s.eval(2.5), 2.0 / 3.0));
        assert!(close(s.eval(3.0), 0.0));
        assert!(kaplan_meier(&[], &[]).is_err());
    }

    #[test]
    fn km_ties_keep_same_time_censorings_at_risk() {
        // at t = 1: 4 at risk, 1 event, 1 censoring
        let s = kaplan_meier(&[1.0, 1.0, 2.0, 3.0], &[true, false, true, false]).unwrap();
        assert!(close(s.eval(1.0), 0.75));
        assert!(close(s.eval(2.0), 0.75 * 0.5));
    }

    #[test]
    fn censoring_survival_examples() {
        let g = censoring_survival(&[1.0, 2.0, 3.0], &[true; 3]).unwrap();
        assert_eq!(g.eval(10.0), 1.0);
        let g = censoring_survival(&[1.0, 2.0], &[true, false]).unwrap();
        assert_eq!(g.eval(1.0), 1.0);
        assert_eq!(g.eval(2.0), 0.0);
        assert_eq!(g.left_limit(2.0), 1.0);
    }

    #[test]
    fn step_function_integral_and_median() {
        let s = StepFunction::new(vec![5.0], vec![0.5], 1.0).unwrap();
        assert!(close(s.integral(0.0, 10.0), 7.5));
        assert!(close(s.integral(6.0, 8.0), 1.0));
        assert!(close(s.integral(0.0, 5.0), 5.0));
        assert_eq!(s.median(), Some(5.0));
        assert_eq!(StepFunction::constant(1.0).median(), None);
        assert!(StepFunction::new(vec![2.0, 1.0], vec![1.0, 0.5], 1.0).is_err());
    }

    #[test]
    fn logrank_identical_groups() {
        let t = [1.0, 2.0, 3.0, 5.0];
        let e = [true, false, true, true];
        let r =
            logrank_two_sample(Cohort::new(&t, &e).unwrap(), Cohort::new(&t, &e).unwrap()).unwrap();
        assert!(r.statistic.abs() < 1e-12);
        assert!((r.p_value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn logrank_well_separated_groups() {
        let a = Cohort::new(&[1.0, 2.0, 3.0], &[true; 3]).unwrap();
        let b = Cohort::new(&[10.0, 11.0, 12.0], &[true; 3]).unwrap();
        let r = logrank_two_sample(a, b).unwrap();
        // O_A = 3, E_A = 1/2 + 2/5 + 1/4 = 1.15, V = 1/4 + 6/25 + 3/16 = 0.6775
        let expected = 1.85f64 * 1.85 / 0.6775;
        assert!(close(r.statistic, expected), "{}", r.statistic);
        assert!(r.p_value < 0.05 && r.p_value > 0.02, "{}", r.p_value);
        let swapped = logrank_two_sample(b, a).unwrap();
        assert!(close(r.statistic, swapped.statistic));
    }

    #[test]
    fn logrank_relabelled_pair_matches_hand_sums() {
        // A = {1 event, 2 event}, B = {1 event, 2 event}; move B's t=2 patient to A
        let a = Cohort::new(&[1.0, 2.0, 2.0], &[true; 3]).unwrap();
        let b = Cohort::new(&[1.0], &[true]).unwrap();
        // t=1: n=4, nA=3, d=2, dA=1 -> E=1.5, V=2*.75*.25*2/3=0.25
        // t=2: n=2, nA=2, d=2, dA=2 -> E=2, V=0
        let s = logrank_sums(a, b);
        assert!(close(s.observed_a, 3.0));
        assert!(close(s.expected_a, 3.5));
        assert!(close(s.variance, 0.25));
        assert!(close(s.statistic(), 1.0));
        assert!(close(
            s.observed_a - s.expected_a,
            -(s.observed_b - s.expected_b)
        ));
    }

    #[test]
    fn chi2_tail_matches_erfc() {
        for x in [0.01, 0.5, 1.0, 3.841458820694124, 6.63, 20.0, 80.0] {
            let expected = libm::erfc(libm::sqrt(x / 2.0));
            assert!((chi2_sf_1df(x) - expected).abs() < 1e-10, "x={x}");
        }
        assert!((chi2_sf_1df(3.841458820694124) - 0.05).abs() < 1e-10);
    }
}
