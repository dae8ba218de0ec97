//! Synthetic XOR survival problem.
//!
//! Patients with `(x0^2 + x1^2 <= 0.6) XOR (x0 * x1 <= 0)` draw their event
//! time from a gamma distribution, all others from an exponential one. Each
//! distribution gets uniform censoring calibrated to its own target rate.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::data::SurvivalDataset;
use crate::error::{Error, Result};
use crate::rng::CounterRng;

pub const RADIUS_SQ_THRESHOLD: f64 = 0.6;
pub const PRODUCT_THRESHOLD: f64 = 0.0;

/// Half-width of the covariate square for which the disk `x0^2 + x1^2 <= 0.6`
/// covers exactly half the area, so all four cells hold a quarter of the
/// patients in expectation.
pub fn balanced_half_width() -> f64 {
    libm::sqrt(0.3 * core::f64::consts::PI)
}

#[derive(Debug, Clone, PartialEq)]
pub struct XorParams {
    pub n: usize,
    pub seed: u64,
    /// Covariates are uniform on `[-half_width, half_width]^2`.
    pub half_width: f64,
    pub scale_exp: f64,
    pub shape_gamma: f64,
    pub scale_gamma: f64,
    /// Target censoring rates for (exponential, gamma) patients.
    pub censor_rates: (f64, f64),
}

impl Default for XorParams {
    fn default() -> Self {
        Self {
            n: 10_000,
            seed: 0,
            half_width: balanced_half_width(),
            scale_exp: 1.0,
            shape_gamma: 2.0,
            scale_gamma: 1.0,
            censor_rates: (0.20, 0.10),
        }
    }
}

impl XorParams {
    fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if self.n < 2 {
            return Err(Error::InvalidArgument(String::from("n must be at least 2")));
        }
        if !positive(self.half_width) {
            return Err(Error::InvalidArgument(String::from(
                "half_width must be positive",
            )));
        }
        if !(positive(self.scale_exp) && positive(self.shape_gamma) && positive(self.scale_gamma)) {
            return Err(Error::InvalidArgument(String::from(
                "distribution parameters must be positive",
            )));
        }
        for r in [self.censor_rates.0, self.censor_rates.1] {
            if !(0.0..1.0).contains(&r) {
                return Err(Error::InvalidArgument(alloc::format!(
                    "censoring rate {r} not in [0, 1)"
                )));
            }
        }
        Ok(())
    }
}

/// Ground-truth cell of a patient: the two indicator features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct XorCell {
    pub radius_le: bool,
    pub product_le: bool,
}

impl XorCell {
    pub fn of(x0: f64, x1: f64) -> Self {
        Self {
            radius_le: x0 * x0 + x1 * x1 <= RADIUS_SQ_THRESHOLD,
            product_le: x0 * x1 <= PRODUCT_THRESHOLD,
        }
    }

    /// True for the gamma-distributed group.
    pub fn is_gamma(self) -> bool {
        self.radius_le ^ self.product_le
    }

    /// `2 * radius_le + product_le`, in `0..4`.
    pub fn id(self) -> u8 {
        (u8::from(self.radius_le) << 1) | u8::from(self.product_le)
    }
}

#[derive(Debug, Clone)]
pub struct XorData {
    pub dataset: SurvivalDataset,
    pub cells: Vec<XorCell>,
    /// Calibrated censoring bounds for (exponential, gamma); infinite means no censoring.
    pub censor_bounds: (f64, f64),
}

pub fn generate_xor_survival(p: &XorParams) -> Result<XorData> {
    p.validate()?;
    let root = CounterRng::new(p.seed).derive_named("xor");
    let mut cov_rng = root.derive_named("covariates");
    let mut time_rng = root.derive_named("event-times");
    let mut cens_rng = root.derive_named("censoring");

    let mut covariates = Vec::with_capacity(2 * p.n);
    let mut cells = Vec::with_capacity(p.n);
    let mut event_times = Vec::with_capacity(p.n);
    for _ in 0..p.n {
        let x0 = cov_rng.uniform_range(-p.half_width, p.half_width);
        let x1 = cov_rng.uniform_range(-p.half_width, p.half_width);
        let cell = XorCell::of(x0, x1);
        let t = if cell.is_gamma() {
            time_rng.gamma(p.shape_gamma, p.scale_gamma)
        } else {
            time_rng.exponential(p.scale_exp)
        };
        covariates.push(x0);
        covariates.push(x1);
        cells.push(cell);
        // a zero draw would violate the positive-time invariant
        event_times.push(t.max(f64::MIN_POSITIVE));
    }

    let group_times = |gamma: bool| -> Vec<f64> {
        cells
            .iter()
            .zip(&event_times)
            .filter(|(c, _)| c.is_gamma() == gamma)
            .map(|(_, &t)| t)
            .collect()
    };
    let bound = |gamma: bool, rate: f64| -> Result<f64> {
        let ts = group_times(gamma);
        if ts.is_empty() {
            return Ok(f64::INFINITY);
        }
        calibrate_censoring(&ts, rate)
    };
    let u_exp = bound(false, p.censor_rates.0)?;
    let u_gamma = bound(true, p.censor_rates.1)?;

    let mut times = Vec::with_capacity(p.n);
    let mut events = Vec::with_capacity(p.n);
    for (cell, &t) in cells.iter().zip(&event_times) {
        let u = if cell.is_gamma() { u_gamma } else { u_exp };
        // one draw per patient regardless of group keeps streams aligned
        let v = cens_rng.uniform();
        let c = if u.is_finite() {
            (u * v).max(f64::MIN_POSITIVE)
        } else {
            f64::INFINITY
        };
        if t <= c {
            times.push(t);
            events.push(true);
        } else {
            times.push(c);
            events.push(false);
        }
    }
    let dataset = SurvivalDataset::new(
        vec![String::from("x0"), String::from("x1")],
        covariates,
        times,
        events,
    )?;
    Ok(XorData {
        dataset,
        cells,
        censor_bounds: (u_exp, u_gamma),
    })
}

/// Expected fraction of `event_times` censored by `C ~ Uniform(0, u)`.
pub fn expected_censoring_rate(event_times: &[f64], u: f64) -> f64 {
    if !u.is_finite() {
        return 0.0;
    }
    event_times.iter().map(|&t| t.min(u) / u).sum::<f64>() / event_times.len() as f64
}

/// Bound `u` such that `Uniform(0, u)` censoring hits `target_rate` on the
/// empirical event-time sample. Returns `+inf` for a zero target.
pub fn calibrate_censoring(event_times: &[f64], target_rate: f64) -> Result<f64> {
    if event_times.is_empty() {
        return Err(Error::Empty);
    }
    if !(0.0..1.0).contains(&target_rate) {
        return Err(Error::Calibration(alloc::format!(
            "target rate {target_rate} not in [0, 1)"
        )));
    }
    if event_times.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(Error::Calibration(String::from(
            "event times must be positive and finite",
        )));
    }
    if target_rate == 0.0 {
        return Ok(f64::INFINITY);
    }
    let max = event_times.iter().copied().fold(0.0, f64::max);
    let mean = event_times.iter().sum::<f64>() / event_times.len() as f64;
    // for u >= max the rate is mean / u, solvable in closed form
    if target_rate <= mean / max {
        return Ok(mean / target_rate);
    }
    let (mut lo, mut hi) = (0.0_f64, max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if expected_censoring_rate(event_times, mid) > target_rate {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let u = 0.5 * (lo + hi);
    if u <= 0.0 || (expected_censoring_rate(event_times, u) - target_rate).abs() > 1e-3 {
        return Err(Error::Calibration(alloc::format!(
            "rate {target_rate} unreachable"
        )));
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eq1_examples() {
        let origin = XorCell::of(0.0, 0.0);
        assert!(origin.radius_le && origin.product_le);
        assert!(!origin.is_gamma());
        let p = XorCell::of(0.3, 0.3);
        assert!(p.radius_le && !p.product_le);
        assert!(p.is_gamma());
    }

    #[test]
    fn calibration_boundaries() {
        assert_eq!(calibrate_censoring(&[1.0, 2.0], 0.0), Ok(f64::INFINITY));
        assert_eq!(calibrate_censoring(&[1.0; 10], 0.5), Ok(2.0));
        assert!(calibrate_censoring(&[1.0], 1.0).is_err());
        assert!(calibrate_censoring(&[], 0.2).is_err());
    }

    #[test]
    fn calibration_bisection_branch() {
        // high target forces u below max(T)
        let ts: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        let u = calibrate_censoring(&ts, 0.9).unwrap();
        assert!(u < 100.0);
        assert!((expected_censoring_rate(&ts, u) - 0.9).abs() < 1e-3);
    }

    #[test]
    fn calibrated_exponential_rate_monte_carlo() {
        let mut rng = CounterRng::new(1);
        let ts: Vec<f64> = (0..100_000).map(|_| rng.exponential(1.0)).collect();
        let u = calibrate_censoring(&ts, 0.2).unwrap();
        let censored =
            ts.iter().filter(|&&t| rng.uniform() * u < t).count() as f64 / ts.len() as f64;
        assert!((censored - 0.2).abs() < 0.01, "{censored}");
    }

    #[test]
    fn generator_rates_and_cells() {
        let data = generate_xor_survival(&XorParams {
            n: 10_000,
            seed: 3,
            ..Default::default()
        })
        .unwrap();
        let ds = &data.dataset;
        for gamma in [false, true] {
            let idx: Vec<usize> = (0..ds.n())
                .filter(|&i| data.cells[i].is_gamma() == gamma)
                .collect();
            let rate = idx.iter().filter(|&&i| !ds.events()[i]).count() as f64 / idx.len() as f64;
            let target = if gamma { 0.10 } else { 0.20 };
            assert!((rate - target).abs() < 0.02, "gamma={gamma} rate={rate}");
        }
        for id in 0..4u8 {
            let share = data.cells.iter().filter(|c| c.id() == id).count() as f64 / ds.n() as f64;
            assert!((share - 0.25).abs() < 0.02, "cell {id}: {share}");
        }
        for i in 0..ds.n() {
            let r = ds.row(i);
            assert_eq!(XorCell::of(r[0], r[1]), data.cells[i]);
        }
    }

    #[test]
    fn generator_is_deterministic() {
        let p = XorParams {
            n: 500,
            seed: 42,
            ..Default::default()
        };
        let a = generate_xor_survival(&p).unwrap();
        let b = generate_xor_survival(&p).unwrap();
        assert_eq!(a.dataset, b.dataset);
        assert_eq!(a.cells, b.cells);
    }

    #[test]
    fn observed_event_times_are_the_event_draws() {
        // regenerating without censoring gives the raw draws
        let p = XorParams {
            n: 300,
            seed: 8,
            ..Default::default()
        };
        let raw = generate_xor_survival(&XorParams {
            censor_rates: (0.0, 0.0),
            ..p.clone()
        })
        .unwrap();
        let cen = generate_xor_survival(&p).unwrap();
        assert!(raw.dataset.events().iter().all(|&e| e));
        for i in 0..p.n {
            if cen.dataset.events()[i] {
                assert_eq!(cen.dataset.times()[i], raw.dataset.times()[i]);
            } else {
                assert!(cen.dataset.times()[i] < raw.dataset.times()[i]);
            }
        }
    }
}
