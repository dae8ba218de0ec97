//! Decoding `2^D - 1` evolved expressions into a depth-`D` survival tree.
//!
//! Expression `j` sits at heap position `j`. Each patient is routed down the
//! full template to one of `2^D` path codes; an internal node is kept only if
//! both children receive at least `min_leaf` patients, otherwise it becomes
//! a leaf and its subtree is dropped.

use alloc::vec;
use alloc::vec::Vec;

use super::{Leaf, Node, SplitRule, SurvivalTree};
use crate::data::SurvivalDataset;
use crate::error::{Error, Result};
use crate::estimators::km_sorted;
use crate::expr::{binary_output, template_len, MultiGenotype};

/// Index in `0..2^depth` of the bottom node reached when every internal
/// position `p` sends the patient left iff `goes_left(p)`.
pub fn path_code(depth: usize, mut goes_left: impl FnMut(usize) -> bool) -> usize {
    let mut p = 0;
    for _ in 0..depth {
        p = if goes_left(p) { 2 * p + 1 } else { 2 * p + 2 };
    }
    p + 1 - (1 << depth)
}

/// Shape left after pruning a full template by per-code patient counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrunedLayout {
    pub depth: usize,
    /// Kept internal positions, ascending.
    pub internal: Vec<usize>,
    /// Leaf positions, ascending.
    pub leaves: Vec<usize>,
    /// Leaf position that each path code ends in.
    pub leaf_of_code: Vec<usize>,
}

impl PrunedLayout {
    pub fn is_internal(&self, pos: usize) -> bool {
        self.internal.binary_search(&pos).is_ok()
    }
}

pub fn prune_by_counts(code_counts: &[usize], depth: usize, min_leaf: usize) -> PrunedLayout {
    debug_assert_eq!(code_counts.len(), 1 << depth);
    let len = template_len(depth);
    let first_bottom = (1usize << depth) - 1;
    let mut counts = vec![0usize; len];
    counts[first_bottom..].copy_from_slice(code_counts);
    for p in (0..first_bottom).rev() {
        counts[p] = counts[2 * p + 1] + counts[2 * p + 2];
    }
    let mut internal = Vec::new();
    let mut leaves = Vec::new();
    let mut is_leaf = vec![false; len];
    let mut stack = vec![0usize];
    while let Some(p) = stack.pop() {
        if p < first_bottom && counts[2 * p + 1] >= min_leaf && counts[2 * p + 2] >= min_leaf {
            internal.push(p);
            stack.push(2 * p + 2);
            stack.push(2 * p + 1);
        } else {
            leaves.push(p);
            is_leaf[p] = true;
        }
    }
    internal.sort_unstable();
    leaves.sort_unstable();
    let leaf_of_code = (0..code_counts.len())
        .map(|c| {
            // climb from the bottom node to the highest leaf ancestor
            let mut p = c + first_bottom;
            let mut found = p;
            loop {
                if is_leaf[p] {
                    found = p;
                }
                if p == 0 {
                    break;
                }
                p = (p - 1) / 2;
            }
            found
        })
        .collect();
    PrunedLayout {
        depth,
        internal,
        leaves,
        leaf_of_code,
    }
}

/// Depth `D` with `k == 2^D - 1`, if any.
pub(crate) fn depth_for_trees(k: usize) -> Option<usize> {
    (k + 1)
        .is_power_of_two()
        .then(|| (k + 1).trailing_zeros() as usize)
        .filter(|&d| (1..=15).contains(&d))
}

/// Builds the pruned tree on every patient of `data`; leaves hold their
/// patients' Kaplan-Meier curves.
pub fn decode_evolved(
    mg: &MultiGenotype,
    data: &SurvivalDataset,
    min_leaf: usize,
) -> Result<SurvivalTree> {
    let depth = depth_for_trees(mg.k()).ok_or_else(|| {
        Error::Config(alloc::format!(
            "{} expressions cannot fill a complete tree (need 2^D - 1)",
            mg.k()
        ))
    })?;
    if min_leaf == 0 {
        return Err(Error::InvalidArgument(alloc::string::String::from(
            "min_leaf must be at least 1",
        )));
    }
    let codes: Vec<usize> = (0..data.n())
        .map(|i| {
            let row = data.row(i);
            path_code(depth, |p| binary_output(&mg.trees[p], row))
        })
        .collect();
    let mut counts = vec![0usize; 1 << depth];
    for &c in &codes {
        counts[c] += 1;
    }
    let layout = prune_by_counts(&counts, depth, min_leaf);

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); template_len(depth)];
    for (i, &c) in codes.iter().enumerate() {
        members[layout.leaf_of_code[c]].push(i);
    }
    let mut nodes: Vec<Option<Node>> = vec![None; template_len(depth)];
    for &p in &layout.internal {
        nodes[p] = Some(Node::Split(SplitRule::Expression(mg.trees[p].clone())));
    }
    for &p in &layout.leaves {
        let mut idx = core::mem::take(&mut members[p]);
        idx.sort_by(|&a, &b| data.times()[a].total_cmp(&data.times()[b]));
        let survival = km_sorted(
            idx.iter().map(|&i| (data.times()[i], data.events()[i])),
            idx.len(),
        );
        nodes[p] = Some(Node::Leaf(Leaf {
            survival,
            size: idx.len(),
        }));
    }
    SurvivalTree::new(depth, nodes, Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_expression, Genotype};
    use alloc::string::String;

    fn expr(s: &str) -> Genotype {
        parse_expression(s, 2, &[]).unwrap()
    }

    fn data(rows: &[[f64; 2]]) -> SurvivalDataset {
        let cov: Vec<f64> = rows.iter().flatten().copied().collect();
        let n = rows.len();
        SurvivalDataset::new(
            vec![String::from("x0"), String::from("x1")],
            cov,
            (1..=n).map(|i| i as f64).collect(),
            vec![true; n],
        )
        .unwrap()
    }

    #[test]
    fn path_codes() {
        assert_eq!(path_code(2, |_| true), 0);
        assert_eq!(path_code(2, |_| false), 3);
        assert_eq!(path_code(2, |p| p == 0), 1);
        assert_eq!(path_code(0, |_| true), 0);
    }

    #[test]
    fn pruning_collapses_thin_subtrees() {
        let full = prune_by_counts(&[5, 5, 5, 5], 2, 5);
        assert_eq!(full.internal, vec![0, 1, 2]);
        assert_eq!(full.leaf_of_code, vec![3, 4, 5, 6]);
        let partial = prune_by_counts(&[5, 4, 5, 5], 2, 5);
        assert_eq!(partial.internal, vec![0, 2]);
        assert_eq!(partial.leaves, vec![1, 5, 6]);
        assert_eq!(partial.leaf_of_code, vec![1, 1, 5, 6]);
        let root = prune_by_counts(&[10, 10, 0, 0], 2, 1);
        assert_eq!(root.internal, Vec::<usize>::new());
        assert_eq!(root.leaf_of_code, vec![0; 4]);
    }

    #[test]
    fn constant_true_root_gives_single_leaf() {
        let mg = MultiGenotype::new(vec![expr("1"), expr("(x0 <= 0)"), expr("(x1 <= 0)")], true);
        let d = data(&[[-1.0, -1.0], [1.0, 1.0], [-1.0, 1.0], [1.0, -1.0]]);
        let tree = decode_evolved(&mg, &d, 1).unwrap();
        assert_eq!(tree.leaf_count(), 1);
        assert_eq!(tree.leaf(0).unwrap().size, 4);
    }

    #[test]
    fn full_decoding_routes_true_left() {
        let mg = MultiGenotype::new(
            vec![expr("(x0 <= 0)"), expr("(x1 <= 0)"), expr("(x1 <= 0)")],
            true,
        );
        let d = data(&[[-1.0, -1.0], [-1.0, 1.0], [1.0, -1.0], [1.0, 1.0]]);
        let tree = decode_evolved(&mg, &d, 1).unwrap();
        assert_eq!(tree.split_positions(), vec![0, 1, 2]);
        for (i, want) in [3, 4, 5, 6].into_iter().enumerate() {
            assert_eq!(tree.leaf_of(d.row(i)), want);
            assert_eq!(tree.leaf(want).unwrap().size, 1);
        }
        assert!(decode_evolved(&MultiGenotype::new(vec![expr("1"); 2], true), &d, 1).is_err());
    }
}
