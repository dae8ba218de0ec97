use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Harrell's C-index. Pairs `(i, j)` with `T_i < T_j` and an observed event
/// for `i` are comparable; higher risk for `i` is concordant, tied risks
/// count one half.
///
/// Runs in `O(n log n)`: patients are swept from the latest time backwards
/// while a Fenwick tree over risk ranks holds everyone strictly later.
pub fn concordance_index(risks: &[f64], times: &[f64], events: &[bool]) -> Result<f64> {
    let n = risks.len();
    if times.len() != n || events.len() != n {
        return Err(Error::LengthMismatch(n, times.len().min(events.len())));
    }
    if risks.iter().chain(times).any(|v| v.is_nan()) {
        return Err(Error::InvalidArgument(alloc::string::String::from(
            "NaN risk or time",
        )));
    }
    let mut sorted_risks = risks.to_vec();
    sorted_risks.sort_by(f64::total_cmp);
    sorted_risks.dedup();
    let rank = |r: f64| sorted_risks.partition_point(|&x| x < r);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| times[b].total_cmp(&times[a]));

    let mut tree = Fenwick::new(sorted_risks.len());
    let (mut concordant, mut tied, mut pairs) = (0u64, 0u64, 0u64);
    let mut later = 0u64;
    let mut i = 0;
    while i < n {
        let t = times[order[i]];
        let mut j = i;
        while j < n && times[order[j]] == t {
            j += 1;
        }
        for &p in &order[i..j] {
            if events[p] {
                let r = rank(risks[p]);
                let below = tree.prefix(r);
                let equal = tree.prefix(r + 1) - below;
                concordant += below;
                tied += equal;
                pairs += later;
            }
        }
        for &p in &order[i..j] {
            tree.add(rank(risks[p]));
            later += 1;
        }
        i = j;
    }
    if pairs == 0 {
        return Err(Error::NoComparablePairs);
    }
    Ok((concordant as f64 + 0.5 * tied as f64) / pairs as f64)
}

struct Fenwick {
    counts: Vec<u64>,
}

impl Fenwick {
    fn new(n: usize) -> Self {
        Self {
            counts: vec![0; n + 1],
        }
    }

    fn add(&mut self, i: usize) {
        let mut k = i + 1;
        while k < self.counts.len() {
            self.counts[k] += 1;
            k += k & k.wrapping_neg();
        }
    }

    /// Sum over ranks `< i`.
    fn prefix(&self, i: usize) -> u64 {
        let mut k = i;
        let mut s = 0;
        while k > 0 {
            s += self.counts[k];
            k -= k & k.wrapping_neg();
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfectly_ordered_risks() {
        let t = [1.0, 2.0, 3.0, 4.0];
        let r = [4.0, 3.0, 2.0, 1.0];
        assert_eq!(concordance_index(&r, &t, &[true; 4]).unwrap(), 1.0);
    }

    #[test]
    fn constant_risks_are_uninformative() {
        let t = [1.0, 2.0, 2.0, 5.0, 7.0];
        let e = [true, false, true, true, false];
        assert_eq!(concordance_index(&[0.3; 5], &t, &e).unwrap(), 0.5);
    }

    #[test]
    fn hand_enumerated_three_patients() {
        // pairs (0,1): 3>1 ok, (0,2): 3>2 ok, (1,2): 1<2 discordant
        let c = concordance_index(&[3.0, 1.0, 2.0], &[1.0, 2.0, 3.0], &[true; 3]).unwrap();
        assert!((c - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn no_comparable_pairs() {
        assert_eq!(
            concordance_index(&[1.0, 2.0], &[1.0, 2.0], &[false, false]),
            Err(Error::NoComparablePairs)
        );
        assert_eq!(
            concordance_index(&[1.0, 2.0], &[1.0, 1.0], &[true, true]),
            Err(Error::NoComparablePairs)
        );
    }
}
