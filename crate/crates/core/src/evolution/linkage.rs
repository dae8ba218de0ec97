//! Linkage-tree family of subsets over template positions.

use alloc::vec;
use alloc::vec::Vec;

use crate::expr::Genotype;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LinkageKind {
    /// UPGMA linkage tree under normalized mutual information.
    #[default]
    Tree,
    /// Singletons only.
    Univariate,
}

fn entropy_of_runs<T: Ord>(mut items: Vec<T>) -> f64 {
    let n = items.len() as f64;
    items.sort_unstable();
    let mut h = 0.0;
    let mut i = 0;
    while i < items.len() {
        let mut j = i + 1;
        while j < items.len() && items[j] == items[i] {
            j += 1;
        }
        let p = (j - i) as f64 / n;
        h -= p * libm::log(p);
        i = j;
    }
    h
}

/// `MI(i, j) / sqrt(H(i) H(j))`, defined as 0 when either entropy is 0.
pub fn normalized_mutual_information(a: &[u64], b: &[u64]) -> f64 {
    let ha = entropy_of_runs(a.to_vec());
    let hb = entropy_of_runs(b.to_vec());
    if ha <= 0.0 || hb <= 0.0 {
        return 0.0;
    }
    let hab = entropy_of_runs(a.iter().copied().zip(b.iter().copied()).collect());
    ((ha + hb - hab) / libm::sqrt(ha * hb)).clamp(0.0, 1.0)
}

/// Family of subsets for one template, learned from the same tree slot of
/// every individual. The tree variant returns the `L` singletons followed by
/// the `L - 2` merged clusters below the root, in merge order.
#[allow(clippy::needless_range_loop)] // pairwise scans over a symmetric matrix
pub fn learn_linkage(trees: &[&Genotype], kind: LinkageKind) -> Vec<Vec<usize>> {
    let len = trees.first().map_or(0, |g| g.len());
    let mut fos: Vec<Vec<usize>> = (0..len).map(|p| vec![p]).collect();
    if kind == LinkageKind::Univariate || len < 3 {
        return fos;
    }
    let columns: Vec<Vec<u64>> = (0..len)
        .map(|p| trees.iter().map(|g| g.symbols()[p].key()).collect())
        .collect();
    let mut sim = vec![vec![0.0; len]; len];
    for i in 0..len {
        for j in i + 1..len {
            let v = normalized_mutual_information(&columns[i], &columns[j]);
            sim[i][j] = v;
            sim[j][i] = v;
        }
    }

    let mut clusters: Vec<Vec<usize>> = fos.clone();
    while clusters.len() > 2 {
        let mut best = (f64::NEG_INFINITY, 0, 1);
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                if sim[a][b] > best.0 {
                    best = (sim[a][b], a, b);
                }
            }
        }
        let (_, a, b) = best;
        let (na, nb) = (clusters[a].len() as f64, clusters[b].len() as f64);
        let merged_row: Vec<f64> = (0..clusters.len())
            .map(|c| (na * sim[a][c] + nb * sim[b][c]) / (na + nb))
            .collect();
        let cb = clusters.remove(b);
        clusters[a].extend(cb);
        clusters[a].sort_unstable();
        for (c, row) in sim.iter_mut().enumerate() {
            row[a] = merged_row[c];
        }
        sim[a] = merged_row;
        sim[a][a] = 0.0;
        sim.remove(b);
        for row in sim.iter_mut() {
            row.remove(b);
        }
        fos.push(clusters[a].clone());
    }
    fos
}
