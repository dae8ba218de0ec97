//! IPCW Brier score and its time integral.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::estimators::{censoring_survival, Cohort, StepFunction};

/// Brier score at `t` with inverse-probability-of-censoring weights from `g`.
pub fn brier_score_at(
    predicted: &[&StepFunction],
    test: Cohort<'_>,
    g: &StepFunction,
    t: f64,
) -> Result<f64> {
    if predicted.len() != test.len() {
        return Err(Error::LengthMismatch(predicted.len(), test.len()));
    }
    let mut sum = 0.0;
    for (i, s) in predicted.iter().enumerate() {
        let ti = test.times[i];
        if ti <= t && test.events[i] {
            let w = g.left_limit(ti);
            if w <= 0.0 {
                return Err(Error::UndefinedWeight(ti));
            }
            let p = s.eval(t);
            sum += p * p / w;
        } else if ti > t {
            let w = g.eval(t);
            if w <= 0.0 {
                return Err(Error::UndefinedWeight(t));
            }
            let p = 1.0 - s.eval(t);
            sum += p * p / w;
        }
    }
    Ok(sum / test.len() as f64)
}

/// Precomputed censoring weights and time grid for one train/test pair, so
/// many predictors can be scored against the same split cheaply.
#[derive(Debug, Clone)]
pub struct IbsContext {
    grid: Vec<f64>,
    inv_g_grid: Vec<f64>,
    // test patients in time order
    order: Vec<usize>,
    sorted_times: Vec<f64>,
    sorted_events: Vec<bool>,
    inv_g_left: Vec<f64>,
}

impl IbsContext {
    pub fn new(train: Cohort<'_>, test: Cohort<'_>) -> Result<Self> {
        let g = censoring_survival(train.times, train.events)?;
        Self::with_censoring(&g, train, test)
    }

    pub fn with_censoring(g: &StepFunction, train: Cohort<'_>, test: Cohort<'_>) -> Result<Self> {
        if test.is_empty() {
            return Err(Error::Empty);
        }
        let (ev_lo, ev_hi) = train
            .times
            .iter()
            .zip(train.events)
            .filter(|(_, &e)| e)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (&t, _)| {
                (lo.min(t), hi.max(t))
            });
        if !ev_lo.is_finite() {
            return Err(Error::Range("training cohort has no events".into()));
        }
        let order = test.time_order();
        let test_lo = test.times[order[0]];
        let test_hi = test.times[order[order.len() - 1]];
        let lo = test_lo.max(ev_lo);
        let hi = test_hi.min(ev_hi);
        if lo > hi {
            return Err(Error::Range(format!(
                "test range [{test_lo}, {test_hi}] does not meet training event range [{ev_lo}, {ev_hi}]"
            )));
        }
        if lo != test_lo || hi != test_hi {
            log::debug!("IBS range clipped from [{test_lo}, {test_hi}] to [{lo}, {hi}]");
        }

        let mut grid = Vec::with_capacity(order.len() + 2);
        grid.push(lo);
        for &i in &order {
            let t = test.times[i];
            if t > lo && t < hi && t != grid[grid.len() - 1] {
                grid.push(t);
            }
        }
        if hi > lo {
            grid.push(hi);
        }

        let sorted_times: Vec<f64> = order.iter().map(|&i| test.times[i]).collect();
        let sorted_events: Vec<bool> = order.iter().map(|&i| test.events[i]).collect();
        let mut inv_g_left = Vec::with_capacity(order.len());
        for (&t, &e) in sorted_times.iter().zip(&sorted_events) {
            if e && t <= hi {
                let w = g.left_limit(t);
                if w <= 0.0 {
                    return Err(Error::UndefinedWeight(t));
                }
                inv_g_left.push(1.0 / w);
            } else {
                inv_g_left.push(0.0);
            }
        }
        let mut inv_g_grid = Vec::with_capacity(grid.len());
        for &t in &grid {
            let w = g.eval(t);
            let anyone_later = sorted_times.last().is_some_and(|&last| last > t);
            if w <= 0.0 {
                if anyone_later {
                    return Err(Error::UndefinedWeight(t));
                }
                inv_g_grid.push(0.0);
            } else {
                inv_g_grid.push(1.0 / w);
            }
        }
        Ok(Self {
            grid,
            inv_g_grid,
            order,
            sorted_times,
            sorted_events,
            inv_g_left,
        })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn test_len(&self) -> usize {
        self.order.len()
    }

    /// Test patients in ascending time order (original indices).
    pub fn time_order(&self) -> &[usize] {
        &self.order
    }

    /// Brier score on every grid point. `assign[i]` is the curve of test
    /// patient `i` (original order).
    pub fn brier_curve(&self, curves: &[&StepFunction], assign: &[usize]) -> Vec<f64> {
        let n = self.order.len();
        let mut weighted_events = alloc::vec![0.0; curves.len()];
        let mut remaining = alloc::vec![0usize; curves.len()];
        for &a in assign {
            remaining[a] += 1;
        }
        let mut out = Vec::with_capacity(self.grid.len());
        let mut p = 0;
        for (&t, &inv_gt) in self.grid.iter().zip(&self.inv_g_grid) {
            while p < n && self.sorted_times[p] <= t {
                let l = assign[self.order[p]];
                remaining[l] -= 1;
                if self.sorted_events[p] {
                    weighted_events[l] += self.inv_g_left[p];
                }
                p += 1;
            }
            let mut sum = 0.0;
            for (l, curve) in curves.iter().enumerate() {
                if weighted_events[l] == 0.0 && remaining[l] == 0 {
                    continue;
                }
                let s = curve.eval(t);
                sum += s * s * weighted_events[l]
                    + (1.0 - s) * (1.0 - s) * remaining[l] as f64 * inv_gt;
            }
            out.push(sum / n as f64);
        }
        out
    }

    /// Trapezoidal integral of the Brier curve divided by the range length.
    pub fn score(&self, curves: &[&StepFunction], assign: &[usize]) -> f64 {
        let bs = self.brier_curve(curves, assign);
        if bs.len() == 1 {
            return bs[0];
        }
        let mut area = 0.0;
        for k in 1..bs.len() {
            area += (self.grid[k] - self.grid[k - 1]) * (bs[k] + bs[k - 1]) * 0.5;
        }
        area / (self.grid[self.grid.len() - 1] - self.grid[0])
    }
}

/// Integrated Brier score of per-curve predictions; `assign[i]` selects the
/// curve for test patient `i`.
pub fn integrated_brier(
    curves: &[&StepFunction],
    assign: &[usize],
    train: Cohort<'_>,
    test: Cohort<'_>,
) -> Result<f64> {
    if assign.len() != test.len() {
        return Err(Error::LengthMismatch(assign.len(), test.len()));
    }
    if let Some(&bad) = assign.iter().find(|&&a| a >= curves.len()) {
        return Err(Error::InvalidArgument(format!(
            "curve index {bad} out of range"
        )));
    }
    Ok(IbsContext::new(train, test)?.score(curves, assign))
}

/// Integrated Brier score with one predicted curve per test patient.
pub fn integrated_brier_per_patient(
    predicted: &[&StepFunction],
    train: Cohort<'_>,
    test: Cohort<'_>,
) -> Result<f64> {
    let assign: Vec<usize> = (0..predicted.len()).collect();
    integrated_brier(predicted, &assign, train, test)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn oracle_curves(times: &[f64]) -> Vec<StepFunction> {
        // S_i(t) = 1{t < T_i}
        times
            .iter()
            .map(|&t| StepFunction::new(vec![t], vec![0.0], 1.0).unwrap())
            .collect()
    }

    #[test]
    fn oracle_predictor_scores_zero() {
        let times = [1.0, 2.0, 4.0, 7.0];
        let events = [true; 4];
        let c = Cohort::new(&times, &events).unwrap();
        let g = censoring_survival(&times, &events).unwrap();
        let curves = oracle_curves(&times);
        let refs: Vec<&StepFunction> = curves.iter().collect();
        for t in [0.5, 1.0, 3.0, 7.0] {
            assert_eq!(brier_score_at(&refs, c, &g, t).unwrap(), 0.0);
        }
        assert_eq!(integrated_brier_per_patient(&refs, c, c).unwrap(), 0.0);
    }

    #[test]
    fn constant_half_scores_quarter() {
        let times = [1.0, 2.0, 4.0, 7.0];
        let events = [true; 4];
        let c = Cohort::new(&times, &events).unwrap();
        let g = censoring_survival(&times, &events).unwrap();
        let half = StepFunction::constant(0.5);
        let refs = vec![&half; 4];
        for t in [0.5, 2.0, 6.9] {
            assert!((brier_score_at(&refs, c, &g, t).unwrap() - 0.25).abs() < 1e-15);
        }
        assert!((integrated_brier(&[&half], &[0; 4], c, c).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn four_patients_one_censored_matches_direct_sum() {
        let times = [1.0, 2.0, 3.0, 4.0];
        let events = [true, false, true, true];
        let c = Cohort::new(&times, &events).unwrap();
        let g = censoring_survival(&times, &events).unwrap();
        let preds: Vec<StepFunction> = [0.9, 0.6, 0.4, 0.2]
            .iter()
            .map(|&v| StepFunction::constant(v))
            .collect();
        let refs: Vec<&StepFunction> = preds.iter().collect();
        // G: censoring at t=2 with 3 at risk -> G = 2/3 from t = 2 on.
        // t = 2.5: patient 0 event before t, weight 1/G(1-) = 1; patient 1 censored before t: 0;
        // patients 2, 3 alive: weight 1/G(2.5) = 3/2.
        let expected = (0.9f64.powi(2) + 1.5 * (0.6f64.powi(2) + 0.8f64.powi(2))) / 4.0;
        assert!((brier_score_at(&refs, c, &g, 2.5).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn zero_censoring_weight_is_an_error() {
        let times = [1.0, 2.0];
        let events = [true, false];
        let g = censoring_survival(&times, &events).unwrap();
        let s = StepFunction::constant(0.5);
        let test_t = [3.0];
        let test_e = [true];
        let test = Cohort::new(&test_t, &test_e).unwrap();
        assert_eq!(
            brier_score_at(&[&s], test, &g, 2.5),
            Err(Error::UndefinedWeight(2.5))
        );
    }

    #[test]
    fn out_of_range_test_set_is_clipped() {
        let train_t = [1.0, 2.0, 3.0, 4.0];
        let train_e = [true; 4];
        let test_t = [0.5, 2.0, 9.0];
        let test_e = [true, true, true];
        let ctx = IbsContext::new(
            Cohort::new(&train_t, &train_e).unwrap(),
            Cohort::new(&test_t, &test_e).unwrap(),
        )
        .unwrap();
        assert_eq!(ctx.grid(), &[1.0, 2.0, 4.0]);
        let far_t = [10.0, 11.0];
        let far_e = [true, true];
        assert!(matches!(
            IbsContext::new(
                Cohort::new(&train_t, &train_e).unwrap(),
                Cohort::new(&far_t, &far_e).unwrap()
            ),
            Err(Error::Range(_))
        ));
    }
}
