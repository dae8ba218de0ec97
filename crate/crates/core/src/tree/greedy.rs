//! Greedy top-down induction maximizing the two-sample log-rank statistic.
//!
//! For one node, let `t_0 < ... < t_{m-1}` be its distinct event times with
//! `d_j` events and `n_j` at risk, and let patient `p` be at risk at the
//! first `r_p` of them. With `a_j = d_j (n_j - d_j) / ((n_j - 1) n_j)` and
//! `c_j = a_j / n_j`, the statistic for a left group `A` is
//!
//! ```text
//! O = sum_{p in A} delta_p
//! E = sum_{p in A} P(r_p),            P(r) = sum_{j<r} d_j / n_j
//! V = sum_{p in A} Alin(r_p) - sum_j c_j nA_j^2
//! ```
//!
//! where `nA_j` counts members of `A` at risk at `t_j`. Adding patients in
//! feature order keeps `O`, `E` and the linear part of `V` as running sums;
//! the quadratic part grows by `2 sum_{q in A} C(min(r_p, r_q)) + C(r_p)`
//! (`C` the prefix sum of `c`), which two Fenwick trees over `r` answer in
//! `O(log m)`.

use alloc::vec;
use alloc::vec::Vec;

use super::{Feature, Leaf, Node, SplitRule, SurvivalTree};
use crate::error::{Error, Result};
use crate::estimators::km_sorted;
use crate::expr::template_len;

struct Fenwick {
    sum: Vec<f64>,
    count: Vec<u32>,
}

impl Fenwick {
    fn new(n: usize) -> Self {
        Self {
            sum: vec![0.0; n + 1],
            count: vec![0; n + 1],
        }
    }

    fn add(&mut self, at: usize, v: f64) {
        let mut i = at + 1;
        while i < self.sum.len() {
            self.sum[i] += v;
            self.count[i] += 1;
            i += i & i.wrapping_neg();
        }
    }

    /// (sum, count) over positions `<= at`.
    fn prefix(&self, at: usize) -> (f64, u32) {
        let (mut s, mut c) = (0.0, 0);
        let mut i = at + 1;
        while i > 0 {
            s += self.sum[i];
            c += self.count[i];
            i -= i & i.wrapping_neg();
        }
        (s, c)
    }
}

struct Ctx<'a> {
    times: &'a [f64],
    events: &'a [bool],
    columns: &'a [&'a [f64]],
    max_depth: usize,
    min_leaf: usize,
}

/// Grows a tree on every patient. `columns[f][i]` is feature `f` of patient
/// `i`; the result's features are `Feature::Covariate(f)`.
pub fn greedy_induce(
    times: &[f64],
    events: &[bool],
    columns: &[&[f64]],
    max_depth: usize,
    min_leaf: usize,
) -> Result<SurvivalTree> {
    if times.len() != events.len() {
        return Err(Error::LengthMismatch(times.len(), events.len()));
    }
    if let Some(c) = columns.iter().find(|c| c.len() != times.len()) {
        return Err(Error::LengthMismatch(c.len(), times.len()));
    }
    if times.is_empty() {
        return Err(Error::Empty);
    }
    if min_leaf == 0 {
        return Err(Error::InvalidArgument(alloc::string::String::from(
            "min_leaf must be at least 1",
        )));
    }
    let rows: Vec<usize> = (0..times.len()).collect();
    Ok(induce_on(
        times, events, columns, &rows, max_depth, min_leaf,
    ))
}

/// [`greedy_induce`] restricted to the patients in `rows` (non-empty).
pub fn induce_on(
    times: &[f64],
    events: &[bool],
    columns: &[&[f64]],
    rows: &[usize],
    max_depth: usize,
    min_leaf: usize,
) -> SurvivalTree {
    let ctx = Ctx {
        times,
        events,
        columns,
        max_depth,
        min_leaf: min_leaf.max(1),
    };
    let mut idx = rows.to_vec();
    idx.sort_by(|&a, &b| times[a].total_cmp(&times[b]).then(a.cmp(&b)));
    let mut nodes = vec![None; template_len(max_depth)];
    build(&ctx, idx, 0, 0, &mut nodes);
    let features = (0..columns.len()).map(Feature::Covariate).collect();
    SurvivalTree {
        max_depth,
        nodes,
        features,
    }
}

fn build(ctx: &Ctx<'_>, idx: Vec<usize>, pos: usize, depth: usize, nodes: &mut [Option<Node>]) {
    if depth < ctx.max_depth && idx.len() >= 2 * ctx.min_leaf {
        if let Some((feature, threshold)) = best_split(ctx, &idx) {
            let col = ctx.columns[feature];
            let (left, right): (Vec<usize>, Vec<usize>) =
                idx.iter().partition(|&&i| col[i] <= threshold);
            nodes[pos] = Some(Node::Split(SplitRule::Threshold { feature, threshold }));
            build(ctx, left, 2 * pos + 1, depth + 1, nodes);
            build(ctx, right, 2 * pos + 2, depth + 1, nodes);
            return;
        }
    }
    let survival = km_sorted(
        idx.iter().map(|&i| (ctx.times[i], ctx.events[i])),
        idx.len(),
    );
    nodes[pos] = Some(Node::Leaf(Leaf {
        survival,
        size: idx.len(),
    }));
}

/// `idx` must be in time order. Returns the best `(feature, threshold)` with
/// a positive statistic; ties go to the lowest feature, then the lowest
/// threshold.
fn best_split(ctx: &Ctx<'_>, idx: &[usize]) -> Option<(usize, f64)> {
    let n = idx.len();
    // event-time structure of the node
    let mut r = vec![0usize; n];
    let mut p_pref = vec![0.0];
    let mut lin_pref = vec![0.0];
    let mut quad_pref = vec![0.0];
    let mut k = 0;
    while k < n {
        let t = ctx.times[idx[k]];
        let mut end = k;
        let mut d = 0usize;
        while end < n && ctx.times[idx[end]] == t {
            d += usize::from(ctx.events[idx[end]]);
            end += 1;
        }
        if d > 0 {
            let at_risk = (n - k) as f64;
            let d = d as f64;
            let a = if at_risk > 1.0 {
                d * (at_risk - d) / ((at_risk - 1.0) * at_risk)
            } else {
                0.0
            };
            p_pref.push(p_pref[p_pref.len() - 1] + d / at_risk);
            lin_pref.push(lin_pref[lin_pref.len() - 1] + a);
            quad_pref.push(quad_pref[quad_pref.len() - 1] + a / at_risk);
        }
        let m_so_far = p_pref.len() - 1;
        for slot in &mut r[k..end] {
            *slot = m_so_far;
        }
        k = end;
    }
    let m = p_pref.len() - 1;
    if m == 0 {
        return None;
    }

    let mut best: Option<(f64, usize, f64)> = None;
    let mut order: Vec<usize> = (0..n).collect();
    for (f, col) in ctx.columns.iter().enumerate() {
        order.sort_by(|&a, &b| col[idx[a]].total_cmp(&col[idx[b]]).then(a.cmp(&b)));
        let mut fw = Fenwick::new(m + 1);
        let (mut o, mut e, mut lin, mut quad) = (0.0, 0.0, 0.0, 0.0);
        for (count, &kk) in order.iter().enumerate() {
            let rp = r[kk];
            let (below_sum, below_cnt) = fw.prefix(rp);
            let above = count as u32 - below_cnt;
            let s = below_sum + quad_pref[rp] * f64::from(above);
            quad += 2.0 * s + quad_pref[rp];
            lin += lin_pref[rp];
            e += p_pref[rp];
            if ctx.events[idx[kk]] {
                o += 1.0;
            }
            fw.add(rp, quad_pref[rp]);

            let left = count + 1;
            if left >= n || left < ctx.min_leaf || n - left < ctx.min_leaf {
                continue;
            }
            let v = col[idx[kk]];
            let next = col[idx[order[left]]];
            if v >= next {
                continue;
            }
            let var = lin - quad;
            if var <= 1e-12 * lin.max(f64::MIN_POSITIVE) {
                continue;
            }
            let stat = (o - e) * (o - e) / var;
            if best.is_none_or(|(b, _, _)| stat > b) {
                let mut thr = v + (next - v) * 0.5;
                if !(thr >= v && thr < next) {
                    thr = v;
                }
                best = Some((stat, f, thr));
            }
        }
    }
    best.filter(|b| b.0 > 0.0).map(|(_, f, t)| (f, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{logrank_two_sample, Cohort};
    use crate::rng::CounterRng;

    /// Every admissible threshold of every feature scored by the reference
    /// log-rank implementation.
    fn brute_force(
        times: &[f64],
        events: &[bool],
        cols: &[&[f64]],
        min_leaf: usize,
    ) -> Option<(f64, usize, f64)> {
        let mut best: Option<(f64, usize, f64)> = None;
        for (f, col) in cols.iter().enumerate() {
            let mut vals = col.to_vec();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            for w in vals.windows(2) {
                let thr = 0.5 * (w[0] + w[1]);
                let (mut at, mut ae, mut bt, mut be) = (vec![], vec![], vec![], vec![]);
                for i in 0..times.len() {
                    if col[i] <= thr {
                        at.push(times[i]);
                        ae.push(events[i]);
                    } else {
                        bt.push(times[i]);
                        be.push(events[i]);
                    }
                }
                if at.len() < min_leaf || bt.len() < min_leaf {
                    continue;
                }
                let s = logrank_two_sample(
                    Cohort::new(&at, &ae).unwrap(),
                    Cohort::new(&bt, &be).unwrap(),
                )
                .unwrap()
                .statistic;
                if best.is_none_or(|b| s > b.0 + 1e-9) {
                    best = Some((s, f, thr));
                }
            }
        }
        best
    }

    #[test]
    fn root_split_matches_brute_force() {
        let mut rng = CounterRng::new(17);
        for trial in 0..40 {
            let n = 20 + trial * 3;
            // rounded values and times create ties on both axes
            let times: Vec<f64> = (0..n)
                .map(|_| (rng.exponential(2.0) * 4.0).ceil())
                .collect();
            let events: Vec<bool> = (0..n).map(|_| rng.bernoulli(0.7)).collect();
            let cols: Vec<Vec<f64>> = (0..3)
                .map(|_| (0..n).map(|_| (rng.uniform() * 6.0).floor()).collect())
                .collect();
            let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
            let tree = greedy_induce(&times, &events, &refs, 1, 3).unwrap();
            let expected = brute_force(&times, &events, &refs, 3);
            match (tree.node(0).unwrap(), expected) {
                (Node::Split(SplitRule::Threshold { feature, threshold }), Some((s, f, t))) => {
                    assert!(s > 0.0);
                    if (*feature, *threshold) != (f, t) {
                        // only acceptable if the statistics tie
                        let col = refs[*feature];
                        let (mut at, mut ae, mut bt, mut be) = (vec![], vec![], vec![], vec![]);
                        for i in 0..n {
                            if col[i] <= *threshold {
                                at.push(times[i]);
                                ae.push(events[i]);
                            } else {
                                bt.push(times[i]);
                                be.push(events[i]);
                            }
                        }
                        let mine = logrank_two_sample(
                            Cohort::new(&at, &ae).unwrap(),
                            Cohort::new(&bt, &be).unwrap(),
                        )
                        .unwrap()
                        .statistic;
                        assert!((mine - s).abs() < 1e-9 * s.max(1.0), "trial {trial}");
                    }
                }
                (Node::Leaf(_), None) => {}
                (Node::Leaf(_), Some((s, _, _))) => assert!(s <= 1e-9, "trial {trial}: {s}"),
                (n, _) => panic!("trial {trial}: unexpected node {n:?}"),
            }
        }
    }

    #[test]
    fn informative_feature_beats_noise() {
        let times: Vec<f64> = (0..40)
            .map(|i| {
                if i < 20 {
                    1.0 + i as f64 * 0.01
                } else {
                    10.0 + i as f64
                }
            })
            .collect();
        let events = vec![true; 40];
        let x: Vec<f64> = (0..40).map(|i| i as f64).collect();
        let noise: Vec<f64> = (0..40).map(|i| ((i * 7) % 40) as f64).collect();
        let tree = greedy_induce(&times, &events, &[&noise, &x], 1, 2).unwrap();
        let expected = brute_force(&times, &events, &[&noise, &x], 2).unwrap();
        assert_eq!(
            tree.node(0),
            Some(&Node::Split(SplitRule::Threshold {
                feature: expected.1,
                threshold: expected.2
            }))
        );
        assert_eq!(expected.1, 1);
    }

    #[test]
    fn stops_without_admissible_split() {
        let times = [1.0, 2.0, 3.0, 4.0];
        let events = [true; 4];
        let x = [0.0; 4];
        let tree = greedy_induce(&times, &events, &[&x], 3, 1).unwrap();
        assert_eq!(tree.leaf_count(), 1);
        let y = [0.0, 1.0, 2.0, 3.0];
        let tree = greedy_induce(&times, &events, &[&y], 3, 3).unwrap();
        assert_eq!(tree.leaf_count(), 1);
        let tree = greedy_induce(&times, &[false; 4], &[&y], 3, 1).unwrap();
        assert_eq!(tree.leaf_count(), 1);
    }

    #[test]
    fn respects_depth_and_min_leaf() {
        let mut rng = CounterRng::new(3);
        let n = 300;
        let times: Vec<f64> = (0..n).map(|_| rng.exponential(1.0)).collect();
        let events: Vec<bool> = (0..n).map(|_| rng.bernoulli(0.8)).collect();
        let cols: Vec<Vec<f64>> = (0..2)
            .map(|_| (0..n).map(|_| rng.uniform()).collect())
            .collect();
        let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
        let tree = greedy_induce(&times, &events, &refs, 3, 25).unwrap();
        assert!(tree.depth() <= 3);
        let total: usize = tree
            .leaf_positions()
            .iter()
            .map(|&p| tree.leaf(p).unwrap().size)
            .sum();
        assert_eq!(total, n);
        for p in tree.leaf_positions() {
            assert!(tree.leaf(p).unwrap().size >= 25);
        }
    }
}
