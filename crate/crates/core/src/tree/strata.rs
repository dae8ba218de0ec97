//! Patient stratification: leaf signatures and log-rank merging of leaves.

use alloc::vec;
use alloc::vec::Vec;

use super::SurvivalTree;
use crate::data::SurvivalDataset;
use crate::error::{Error, Result};
use crate::estimators::{kaplan_meier, logrank_two_sample, Cohort, StepFunction};

/// Relabels `labels` by order of first appearance and packs each as a
/// little-endian `u16`. Two partitions are equal iff their signatures are.
pub fn signature_from_labels(labels: impl IntoIterator<Item = usize>) -> Vec<u8> {
    let mut seen: Vec<(usize, u16)> = Vec::new();
    let mut out = Vec::new();
    for l in labels {
        let id = match seen.iter().find(|(k, _)| *k == l) {
            Some(&(_, id)) => id,
            None => {
                let id = seen.len() as u16;
                seen.push((l, id));
                id
            }
        };
        out.extend_from_slice(&id.to_le_bytes());
    }
    out
}

/// Signature of the partition `tree` induces on `data`.
pub fn stratification_signature(tree: &SurvivalTree, data: &SurvivalDataset) -> Vec<u8> {
    signature_from_labels((0..data.n()).map(|i| tree.leaf_of(data.row(i))))
}

/// Leaves grouped into survival strata.
#[derive(Debug, Clone, PartialEq)]
pub struct Stratification {
    /// Leaf positions, ascending.
    pub leaves: Vec<usize>,
    /// Group of each entry of `leaves`; groups are numbered by their first leaf.
    pub leaf_group: Vec<usize>,
    /// Group of each patient.
    pub patient_group: Vec<usize>,
    /// Kaplan-Meier curve of each group's patients (the training curve for a
    /// leaf no patient reached).
    pub group_curves: Vec<StepFunction>,
}

/// Routes `data` through `tree` and repeatedly merges the two groups whose
/// log-rank test has the largest p-value while that p-value exceeds `alpha`.
/// Empty leaves stay on their own.
#[allow(clippy::needless_range_loop)] // pairwise scans over groups
pub fn stratify_and_merge(
    tree: &SurvivalTree,
    data: &SurvivalDataset,
    alpha: f64,
) -> Result<Stratification> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(alloc::format!(
            "alpha {alpha} not in (0, 1)"
        )));
    }
    let leaves = tree.leaf_positions();
    let slot_of = |pos: usize| leaves.binary_search(&pos).expect("route ends at a leaf");
    let patient_leaf: Vec<usize> = (0..data.n())
        .map(|i| slot_of(tree.leaf_of(data.row(i))))
        .collect();

    // groups as lists of leaf slots, patients gathered per group
    let mut groups: Vec<Vec<usize>> = (0..leaves.len()).map(|s| vec![s]).collect();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); leaves.len()];
    for (i, &s) in patient_leaf.iter().enumerate() {
        members[s].push(i);
    }
    let cohort_of = |idx: &[usize]| -> (Vec<f64>, Vec<bool>) {
        (
            idx.iter().map(|&i| data.times()[i]).collect(),
            idx.iter().map(|&i| data.events()[i]).collect(),
        )
    };

    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for a in 0..groups.len() {
            if members[a].is_empty() {
                continue;
            }
            let (ta, ea) = cohort_of(&members[a]);
            for b in a + 1..groups.len() {
                if members[b].is_empty() {
                    continue;
                }
                let (tb, eb) = cohort_of(&members[b]);
                let p = logrank_two_sample(Cohort::new(&ta, &ea)?, Cohort::new(&tb, &eb)?)?.p_value;
                if best.is_none_or(|(bp, _, _)| p > bp) {
                    best = Some((p, a, b));
                }
            }
        }
        match best {
            Some((p, a, b)) if p > alpha => {
                let gb = groups.remove(b);
                let mb = members.remove(b);
                groups[a].extend(gb);
                members[a].extend(mb);
            }
            _ => break,
        }
    }

    // groups stay ordered by their smallest leaf slot, since merges keep the lower index
    let mut leaf_group = vec![0usize; leaves.len()];
    for (g, slots) in groups.iter().enumerate() {
        for &s in slots {
            leaf_group[s] = g;
        }
    }
    let patient_group = patient_leaf.iter().map(|&s| leaf_group[s]).collect();
    let mut group_curves = Vec::with_capacity(groups.len());
    for (g, idx) in members.iter().enumerate() {
        if idx.is_empty() {
            let leaf = tree.leaf(leaves[groups[g][0]]).expect("leaf position");
            group_curves.push(leaf.survival.clone());
        } else {
            let (t, e) = cohort_of(idx);
            group_curves.push(kaplan_meier(&t, &e)?);
        }
    }
    Ok(Stratification {
        leaves,
        leaf_group,
        patient_group,
        group_curves,
    })
}
