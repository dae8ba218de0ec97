use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Mean after trimming `floor(n / 4)` values from each end of the sorted input.
pub fn interquartile_mean(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty);
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let trim = v.len() / 4;
    let kept = &v[trim..v.len() - trim];
    Ok(kept.iter().sum::<f64>() / kept.len() as f64)
}

/// Percentile with linear interpolation between closest ranks
/// (position `q * (n - 1)` in the sorted sample).
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = libm::floor(pos) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceInterval {
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Mean and empirical 95% interval of bootstrap replicates.
pub fn bootstrap_ci(values: &[f64]) -> Result<ConfidenceInterval> {
    if values.is_empty() {
        return Err(Error::Empty);
    }
    let mut v: Vec<f64> = values.to_vec();
    v.sort_by(f64::total_cmp);
    // shifted by the first value so a constant sample returns that constant exactly
    let shift = values[0];
    let mean = shift + values.iter().map(|v| v - shift).sum::<f64>() / values.len() as f64;
    Ok(ConfidenceInterval {
        mean,
        lower: percentile(&v, 0.025),
        upper: percentile(&v, 0.975),
    })
}
