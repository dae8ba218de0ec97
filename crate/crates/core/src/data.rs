//! Survival datasets, resampling plans and bootstrap indices.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::rng::CounterRng;

/// Covariates plus per-patient `(time, event)` outcomes. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalDataset {
    names: Vec<String>,
    // row-major, n * d
    covariates: Vec<f64>,
    times: Vec<f64>,
    events: Vec<bool>,
}

impl SurvivalDataset {
    pub fn new(
        names: Vec<String>,
        covariates: Vec<f64>,
        times: Vec<f64>,
        events: Vec<bool>,
    ) -> Result<Self> {
        let n = times.len();
        if events.len() != n {
            return Err(Error::LengthMismatch(n, events.len()));
        }
        if covariates.len() != n * names.len() {
            return Err(Error::LengthMismatch(covariates.len(), n * names.len()));
        }
        if n < 2 {
            return Err(Error::Degenerate(format!(
                "need at least 2 patients, got {n}"
            )));
        }
        if let Some(i) = times.iter().position(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::Degenerate(format!(
                "time at row {i} is not a positive finite number"
            )));
        }
        if let Some(i) = covariates.iter().position(|v| !v.is_finite()) {
            let d = names.len().max(1);
            return Err(Error::Degenerate(format!(
                "missing or non-finite covariate at row {}, column {}",
                i / d,
                i % d
            )));
        }
        if !events.iter().any(|&e| e) {
            return Err(Error::Degenerate(String::from("no observed events")));
        }
        Ok(Self {
            names,
            covariates,
            times,
            events,
        })
    }

    pub fn n(&self) -> usize {
        self.times.len()
    }

    pub fn d(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn events(&self) -> &[bool] {
        &self.events
    }

    pub fn event_count(&self) -> usize {
        self.events.iter().filter(|&&e| e).count()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.d();
        &self.covariates[i * d..(i + 1) * d]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n())
            .map(|i| self.covariates[i * self.d() + j])
            .collect()
    }

    /// Column-major copy of the covariates.
    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.d()).map(|j| self.column(j)).collect()
    }

    /// Rows at `indices` (repeats allowed). Fails like [`SurvivalDataset::new`]
    /// when the selection has no events.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let mut cov = Vec::with_capacity(indices.len() * self.d());
        for &i in indices {
            cov.extend_from_slice(self.row(i));
        }
        Self::new(
            self.names.clone(),
            cov,
            indices.iter().map(|&i| self.times[i]).collect(),
            indices.iter().map(|&i| self.events[i]).collect(),
        )
    }
}

/// Train/test index pairs for repeated shuffle splits.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitPlan {
    pub pairs: Vec<(Vec<usize>, Vec<usize>)>,
    pub test_fraction: f64,
    pub seed: u64,
}

impl SplitPlan {
    pub fn k(&self) -> usize {
        self.pairs.len()
    }

    /// Stable identifier of the plan contents (used as a cache namespace).
    pub fn id(&self) -> u64 {
        let mut h = crate::rng::mix64(self.seed ^ self.pairs.len() as u64);
        for (train, test) in &self.pairs {
            for &i in train {
                h = crate::rng::mix64(h ^ i as u64);
            }
            h = crate::rng::mix64(h ^ 0xffff_ffff);
            for &i in test {
                h = crate::rng::mix64(h ^ i as u64);
            }
        }
        h
    }
}

/// `k` shuffle splits stratified on the event indicator. Each stratum sends
/// `round(size * test_fraction)` patients to the test part.
pub fn stratified_shuffle_splits(
    events: &[bool],
    k: usize,
    test_fraction: f64,
    seed: u64,
) -> Result<SplitPlan> {
    if k == 0 {
        return Err(Error::InvalidArgument(String::from("k must be at least 1")));
    }
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "test_fraction {test_fraction} not in (0, 1)"
        )));
    }
    let uncensored: Vec<usize> = (0..events.len()).filter(|&i| events[i]).collect();
    let censored: Vec<usize> = (0..events.len()).filter(|&i| !events[i]).collect();
    for (name, stratum) in [("events", &uncensored), ("censored", &censored)] {
        // an absent stratum is fine (e.g. fully observed data); a singleton cannot be split
        if stratum.len() == 1 {
            return Err(Error::Stratification {
                stratum: name,
                size: 1,
            });
        }
    }
    let base = CounterRng::new(seed).derive_named("stratified-shuffle-split");
    let mut pairs = Vec::with_capacity(k);
    for s in 0..k {
        let mut rng = base.derive(s as u64);
        let mut train = Vec::with_capacity(events.len());
        let mut test = Vec::new();
        for stratum in [&uncensored, &censored] {
            let mut idx = stratum.clone();
            rng.shuffle(&mut idx);
            let n_test = libm::round(stratum.len() as f64 * test_fraction) as usize;
            test.extend_from_slice(&idx[..n_test]);
            train.extend_from_slice(&idx[n_test..]);
        }
        train.sort_unstable();
        test.sort_unstable();
        pairs.push((train, test));
    }
    Ok(SplitPlan {
        pairs,
        test_fraction,
        seed,
    })
}

/// `n` indices drawn uniformly with replacement from `0..n`.
pub fn bootstrap_resample(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = CounterRng::new(seed).derive_named("bootstrap");
    (0..n).map(|_| rng.below(n)).collect()
}
