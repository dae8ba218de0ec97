//! Bi-objective fitness of a multi-genotype: IQM of the held-out integrated
//! Brier score over a fixed split plan, and a complexity count.
//!
//! * Greedy mode: the `K` expressions are features; a greedy log-rank tree is
//!   grown on each training part. Complexity sums the active sizes of the
//!   features the trees actually use, counting each canonical string once.
//! * Evolved mode: the expressions are the splits of a complete tree, pruned
//!   per training part. Complexity sums the active sizes of the splits kept
//!   when decoding on the whole cohort.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::sync::atomic::{AtomicU64, Ordering};

use crate::data::{SplitPlan, SurvivalDataset};
use crate::error::{Error, Result};
use crate::estimators::{km_sorted, Cohort, StepFunction};
use crate::expr::{
    active_size, evaluate_columns, to_expression_string, truthy, Genotype, MultiGenotype,
};
use crate::metrics::{interquartile_mean, IbsContext, ObjectivePoint};
use crate::rng::mix64;
use crate::tree::{
    decode_evolved, depth_for_trees, greedy_induce, induce_on, path_code, prune_by_counts,
    signature_from_labels, Feature, Node, PrunedLayout, SplitRule, SurvivalTree,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitnessMode {
    /// Expressions are candidate features for greedy induction.
    Greedy,
    /// Expressions are the internal nodes of the tree.
    Evolved,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitnessConfig {
    pub mode: FitnessMode,
    /// Greedy mode only; evolved trees take their depth from `K`.
    pub tree_depth: usize,
    /// Greedy mode only: reduce features to 0/1 by truthiness.
    pub binary_features: bool,
    /// Leaves need at least `ceil(fraction * cohort size)` patients.
    pub min_leaf_fraction: f64,
}

impl FitnessConfig {
    pub fn greedy(tree_depth: usize, binary_features: bool) -> Self {
        Self {
            mode: FitnessMode::Greedy,
            tree_depth,
            binary_features,
            min_leaf_fraction: 0.02,
        }
    }

    pub fn evolved() -> Self {
        Self {
            mode: FitnessMode::Evolved,
            tree_depth: 0,
            binary_features: true,
            min_leaf_fraction: 0.02,
        }
    }

    pub fn min_leaf(&self, cohort: usize) -> usize {
        (libm::ceil(self.min_leaf_fraction * cohort as f64) as usize).max(1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitnessValue {
    pub ibs_iqm: f64,
    pub complexity: u32,
    pub per_split: Vec<f64>,
}

impl FitnessValue {
    pub fn point(&self) -> ObjectivePoint {
        ObjectivePoint::new(self.ibs_iqm, self.complexity)
    }
}

/// Values of one expression on every patient.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureColumn {
    Numeric(Vec<f64>),
    Binary(Vec<bool>),
}

impl FeatureColumn {
    fn numeric(&self) -> &[f64] {
        match self {
            FeatureColumn::Numeric(v) => v,
            FeatureColumn::Binary(_) => panic!("binary column where numeric expected"),
        }
    }

    fn binary(&self) -> &[bool] {
        match self {
            FeatureColumn::Binary(v) => v,
            FeatureColumn::Numeric(_) => panic!("numeric column where binary expected"),
        }
    }
}

/// Per-split scores that depend only on the induced partitions.
#[derive(Debug, Clone, PartialEq)]
pub struct CachedScores {
    pub per_split: Vec<f64>,
    /// Greedy mode: bit `j` set when feature `j` appears in some split.
    pub used_features: u64,
}

/// Memo of split scores keyed by a 128-bit hash of the partition-relevant
/// columns.
pub trait FitnessCache: Send + Sync {
    fn get(&self, key: u128) -> Option<CachedScores>;
    fn insert(&self, key: u128, value: CachedScores);
}

/// Cache that stores nothing.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoCache;

impl FitnessCache for NoCache {
    fn get(&self, _: u128) -> Option<CachedScores> {
        None
    }

    fn insert(&self, _: u128, _: CachedScores) {}
}

#[cfg(feature = "std")]
mod memory_cache {
    use super::{CachedScores, FitnessCache};
    use std::collections::HashMap;
    use std::sync::Mutex;

    /// Unbounded in-memory cache shared between threads.
    #[derive(Debug, Default)]
    pub struct MemoryCache {
        map: Mutex<HashMap<u128, CachedScores>>,
    }

    impl MemoryCache {
        pub fn len(&self) -> usize {
            self.map.lock().map(|m| m.len()).unwrap_or(0)
        }

        pub fn is_empty(&self) -> bool {
            self.len() == 0
        }
    }

    impl FitnessCache for MemoryCache {
        fn get(&self, key: u128) -> Option<CachedScores> {
            self.map.lock().ok()?.get(&key).cloned()
        }

        fn insert(&self, key: u128, value: CachedScores) {
            if let Ok(mut m) = self.map.lock() {
                m.insert(key, value);
            }
        }
    }
}

#[cfg(feature = "std")]
pub use memory_cache::MemoryCache;

/// Two independent 64-bit lanes over a word stream.
pub(crate) fn hash128(words: impl IntoIterator<Item = u64>) -> u128 {
    let (mut a, mut b) = (0x243f_6a88_85a3_08d3_u64, 0x1319_8a2e_0370_7344_u64);
    let mut len = 0u64;
    for w in words {
        a = mix64(a.rotate_left(23) ^ w);
        b = mix64(b.wrapping_add(w).wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ len);
        len += 1;
    }
    (u128::from(mix64(a ^ len)) << 64) | u128::from(mix64(b ^ !len))
}

struct SplitCtx {
    train: Vec<usize>,
    train_by_time: Vec<usize>,
    test: Vec<usize>,
    ibs: IbsContext,
    min_leaf: usize,
}

/// Fitness evaluation bound to one dataset and split plan.
pub struct Evaluator<'a> {
    data: &'a SurvivalDataset,
    columns: Vec<Vec<f64>>,
    cfg: FitnessConfig,
    splits: Vec<SplitCtx>,
    all_by_time: Vec<usize>,
    cache: Box<dyn FitnessCache + 'a>,
    evaluations: AtomicU64,
    cache_hits: AtomicU64,
}

impl<'a> Evaluator<'a> {
    pub fn new(data: &'a SurvivalDataset, plan: &SplitPlan, cfg: FitnessConfig) -> Result<Self> {
        if plan.pairs.is_empty() {
            return Err(Error::Config(String::from("split plan is empty")));
        }
        if !(cfg.min_leaf_fraction >= 0.0 && cfg.min_leaf_fraction < 0.5) {
            return Err(Error::Config(alloc::format!(
                "min_leaf_fraction {} not in [0, 0.5)",
                cfg.min_leaf_fraction
            )));
        }
        let by_time = |idx: &[usize]| {
            let mut v = idx.to_vec();
            v.sort_by(|&a, &b| data.times()[a].total_cmp(&data.times()[b]).then(a.cmp(&b)));
            v
        };
        let mut splits = Vec::with_capacity(plan.pairs.len());
        for (train, test) in &plan.pairs {
            if train.is_empty() || test.is_empty() {
                return Err(Error::Config(String::from("split with an empty part")));
            }
            if let Some(&bad) = train.iter().chain(test).find(|&&i| i >= data.n()) {
                return Err(Error::Config(alloc::format!(
                    "split index {bad} out of range"
                )));
            }
            let sub = |idx: &[usize]| -> (Vec<f64>, Vec<bool>) {
                (
                    idx.iter().map(|&i| data.times()[i]).collect(),
                    idx.iter().map(|&i| data.events()[i]).collect(),
                )
            };
            let (trt, tre) = sub(train);
            let (tet, tee) = sub(test);
            let ibs = IbsContext::new(Cohort::new(&trt, &tre)?, Cohort::new(&tet, &tee)?)?;
            splits.push(SplitCtx {
                train: train.clone(),
                train_by_time: by_time(train),
                test: test.clone(),
                ibs,
                // evolved trees use the cohort-level minimum everywhere, so a
                // node pruned on the whole cohort is pruned on every split and
                // cannot help IBS without counting toward complexity
                min_leaf: match cfg.mode {
                    FitnessMode::Evolved => cfg.min_leaf(data.n()),
                    FitnessMode::Greedy => cfg.min_leaf(train.len()),
                },
            });
        }
        let all: Vec<usize> = (0..data.n()).collect();
        Ok(Self {
            data,
            columns: data.columns(),
            cfg,
            splits,
            all_by_time: by_time(&all),
            cache: Box::new(NoCache),
            evaluations: AtomicU64::new(0),
            cache_hits: AtomicU64::new(0),
        })
    }

    pub fn with_cache(mut self, cache: Box<dyn FitnessCache + 'a>) -> Self {
        self.cache = cache;
        self
    }

    pub fn config(&self) -> &FitnessConfig {
        &self.cfg
    }

    pub fn data(&self) -> &SurvivalDataset {
        self.data
    }

    /// Covariates in column-major order.
    pub fn covariate_columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    /// Full evaluations performed (cache hits included).
    pub fn evaluations(&self) -> u64 {
        self.evaluations.load(Ordering::Relaxed)
    }

    pub fn cache_hits(&self) -> u64 {
        self.cache_hits.load(Ordering::Relaxed)
    }

    /// Checks that `mg` fits this evaluator's mode and data.
    pub fn check(&self, mg: &MultiGenotype) -> Result<()> {
        if mg.k() == 0 {
            return Err(Error::Config(String::from("no expressions")));
        }
        if self.cfg.mode == FitnessMode::Evolved && depth_for_trees(mg.k()).is_none() {
            return Err(Error::Config(alloc::format!(
                "evolved trees need 2^D - 1 expressions, got {}",
                mg.k()
            )));
        }
        if self.cfg.mode == FitnessMode::Greedy && mg.k() > 64 {
            return Err(Error::Config(String::from("at most 64 features")));
        }
        if let Some(v) = mg.trees.iter().filter_map(Genotype::max_var).max() {
            if v as usize >= self.data.d() {
                return Err(Error::Config(alloc::format!("covariate x{v} out of range")));
            }
        }
        Ok(())
    }

    /// Column of expression `g` in the form this evaluator consumes.
    pub fn column(&self, g: &Genotype) -> FeatureColumn {
        let values = evaluate_columns(g, &self.columns, self.data.n());
        match (self.cfg.mode, self.cfg.binary_features) {
            (FitnessMode::Evolved, _) => {
                FeatureColumn::Binary(values.into_iter().map(truthy).collect())
            }
            (FitnessMode::Greedy, true) => FeatureColumn::Numeric(
                values
                    .into_iter()
                    .map(|v| f64::from(u8::from(truthy(v))))
                    .collect(),
            ),
            (FitnessMode::Greedy, false) => FeatureColumn::Numeric(values),
        }
    }

    pub fn columns_for(&self, mg: &MultiGenotype) -> Vec<FeatureColumn> {
        mg.trees.iter().map(|g| self.column(g)).collect()
    }

    /// Evaluates `mg` from scratch.
    pub fn evaluate(&self, mg: &MultiGenotype) -> Result<FitnessValue> {
        self.check(mg)?;
        let cols = self.columns_for(mg);
        Ok(self.evaluate_columns(mg, &cols))
    }

    /// Evaluates `mg` given its precomputed columns (`cols[j]` belongs to
    /// `mg.trees[j]`).
    pub fn evaluate_columns(&self, mg: &MultiGenotype, cols: &[FeatureColumn]) -> FitnessValue {
        self.evaluations.fetch_add(1, Ordering::Relaxed);
        match self.cfg.mode {
            FitnessMode::Evolved => self.evaluate_evolved(mg, cols),
            FitnessMode::Greedy => self.evaluate_greedy(mg, cols),
        }
    }

    /// Stratification signature of the tree built on the whole cohort.
    pub fn signature(&self, mg: &MultiGenotype, cols: &[FeatureColumn]) -> Vec<u8> {
        match self.cfg.mode {
            FitnessMode::Evolved => {
                let depth = depth_for_trees(mg.k()).expect("checked tree count");
                let codes = self.path_codes(depth, cols);
                let reference = self.reference_layout(depth, &codes);
                signature_from_labels(codes.iter().map(|&c| reference.leaf_of_code[c as usize]))
            }
            FitnessMode::Greedy => {
                let feats: Vec<&[f64]> = cols.iter().map(FeatureColumn::numeric).collect();
                let tree = induce_on(
                    self.data.times(),
                    self.data.events(),
                    &feats,
                    &self.all_by_time,
                    self.cfg.tree_depth,
                    self.cfg.min_leaf(self.data.n()),
                );
                signature_from_labels((0..self.data.n()).map(|i| {
                    tree.route(|rule| match rule {
                        SplitRule::Threshold { feature, threshold } => {
                            feats[*feature][i] <= *threshold
                        }
                        SplitRule::Expression(_) => unreachable!("greedy trees use thresholds"),
                    })
                }))
            }
        }
    }

    fn finish(per_split: Vec<f64>, complexity: u32) -> FitnessValue {
        let ibs_iqm = interquartile_mean(&per_split).expect("plan is non-empty");
        FitnessValue {
            ibs_iqm,
            complexity,
            per_split,
        }
    }

    fn path_codes(&self, depth: usize, cols: &[FeatureColumn]) -> Vec<u16> {
        let bits: Vec<&[bool]> = cols.iter().map(FeatureColumn::binary).collect();
        (0..self.data.n())
            .map(|i| path_code(depth, |p| bits[p][i]) as u16)
            .collect()
    }

    fn reference_layout(&self, depth: usize, codes: &[u16]) -> PrunedLayout {
        let mut counts = vec![0usize; 1 << depth];
        for &c in codes {
            counts[c as usize] += 1;
        }
        prune_by_counts(&counts, depth, self.cfg.min_leaf(self.data.n()))
    }

    fn evaluate_evolved(&self, mg: &MultiGenotype, cols: &[FeatureColumn]) -> FitnessValue {
        let depth = depth_for_trees(mg.k()).expect("checked tree count");
        let codes = self.path_codes(depth, cols);
        let reference = self.reference_layout(depth, &codes);
        let complexity: usize = reference
            .internal
            .iter()
            .map(|&p| active_size(&mg.trees[p]))
            .sum();

        let key = hash128(codes.chunks(4).map(|ch| {
            ch.iter()
                .enumerate()
                .fold(0u64, |w, (j, &c)| w | (u64::from(c) << (16 * j)))
        }));
        let per_split = match self.cache.get(key) {
            Some(hit) => {
                self.cache_hits.fetch_add(1, Ordering::Relaxed);
                hit.per_split
            }
            None => {
                let scores: Vec<f64> = self
                    .splits
                    .iter()
                    .map(|s| self.score_evolved_split(s, &codes, depth))
                    .collect();
                self.cache.insert(
                    key,
                    CachedScores {
                        per_split: scores.clone(),
                        used_features: 0,
                    },
                );
                scores
            }
        };
        Self::finish(per_split, complexity as u32)
    }

    fn score_evolved_split(&self, s: &SplitCtx, codes: &[u16], depth: usize) -> f64 {
        let mut counts = vec![0usize; 1 << depth];
        for &i in &s.train {
            counts[codes[i] as usize] += 1;
        }
        let layout = prune_by_counts(&counts, depth, s.min_leaf);
        let mut slot_of_pos = vec![usize::MAX; 2 << depth];
        for (slot, &p) in layout.leaves.iter().enumerate() {
            slot_of_pos[p] = slot;
        }
        let slot_of_code: Vec<usize> = layout
            .leaf_of_code
            .iter()
            .map(|&p| slot_of_pos[p])
            .collect();
        let curves = self.leaf_curves(&s.train_by_time, layout.leaves.len(), |i| {
            slot_of_code[codes[i] as usize]
        });
        let refs: Vec<&StepFunction> = curves.iter().collect();
        let assign: Vec<usize> = s
            .test
            .iter()
            .map(|&i| slot_of_code[codes[i] as usize])
            .collect();
        s.ibs.score(&refs, &assign)
    }

    /// Kaplan-Meier curve per slot from patients given in time order.
    fn leaf_curves(
        &self,
        by_time: &[usize],
        slots: usize,
        slot: impl Fn(usize) -> usize,
    ) -> Vec<StepFunction> {
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); slots];
        for &i in by_time {
            members[slot(i)].push(i);
        }
        members
            .iter()
            .map(|idx| {
                km_sorted(
                    idx.iter()
                        .map(|&i| (self.data.times()[i], self.data.events()[i])),
                    idx.len(),
                )
            })
            .collect()
    }

    fn evaluate_greedy(&self, mg: &MultiGenotype, cols: &[FeatureColumn]) -> FitnessValue {
        let feats: Vec<&[f64]> = cols.iter().map(FeatureColumn::numeric).collect();
        let depth = self.cfg.tree_depth;
        let key = hash128(feats.iter().flat_map(|c| {
            c.iter()
                .map(|v| v.to_bits())
                .chain(core::iter::once(u64::MAX))
        }));
        let scores = match self.cache.get(key) {
            Some(hit) => {
                self.cache_hits.fetch_add(1, Ordering::Relaxed);
                hit
            }
            None => {
                let mut used = 0u64;
                let mut per_split = Vec::with_capacity(self.splits.len());
                for s in &self.splits {
                    let tree = induce_on(
                        self.data.times(),
                        self.data.events(),
                        &feats,
                        &s.train,
                        depth,
                        s.min_leaf,
                    );
                    let leaves = tree.leaf_positions();
                    let mut slot_of_pos = vec![usize::MAX; tree.nodes().len()];
                    for (slot, &p) in leaves.iter().enumerate() {
                        slot_of_pos[p] = slot;
                    }
                    for node in tree.nodes().iter().flatten() {
                        if let Node::Split(SplitRule::Threshold { feature, .. }) = node {
                            used |= 1 << feature;
                        }
                    }
                    let route = |i: usize| {
                        slot_of_pos[tree.route(|rule| match rule {
                            SplitRule::Threshold { feature, threshold } => {
                                feats[*feature][i] <= *threshold
                            }
                            SplitRule::Expression(_) => unreachable!("greedy trees use thresholds"),
                        })]
                    };
                    let curves: Vec<&StepFunction> = leaves
                        .iter()
                        .map(|&p| &tree.leaf(p).expect("leaf").survival)
                        .collect();
                    let assign: Vec<usize> = s.test.iter().map(|&i| route(i)).collect();
                    per_split.push(s.ibs.score(&curves, &assign));
                }
                let value = CachedScores {
                    per_split,
                    used_features: used,
                };
                self.cache.insert(key, value.clone());
                value
            }
        };

        let mut seen: Vec<String> = Vec::new();
        let mut complexity = 0usize;
        for (j, g) in mg.trees.iter().enumerate() {
            if scores.used_features & (1 << j) == 0 {
                continue;
            }
            let s = to_expression_string(g);
            if !seen.contains(&s) {
                complexity += active_size(g);
                seen.push(s);
            }
        }
        Self::finish(scores.per_split, complexity as u32)
    }
}

/// Tree an individual stands for when fitted on all of `data`: the decoded
/// tree in evolved mode, the greedy tree over its features otherwise.
pub fn fit_tree(
    mg: &MultiGenotype,
    data: &SurvivalDataset,
    cfg: &FitnessConfig,
) -> Result<SurvivalTree> {
    let min_leaf = cfg.min_leaf(data.n());
    if cfg.mode == FitnessMode::Evolved {
        return decode_evolved(mg, data, min_leaf);
    }
    let columns = data.columns();
    let feature_columns: Vec<Vec<f64>> = mg
        .trees
        .iter()
        .map(|g| {
            let v = evaluate_columns(g, &columns, data.n());
            if cfg.binary_features {
                v.into_iter()
                    .map(|x| f64::from(u8::from(truthy(x))))
                    .collect()
            } else {
                v
            }
        })
        .collect();
    let refs: Vec<&[f64]> = feature_columns.iter().map(Vec::as_slice).collect();
    let tree = greedy_induce(data.times(), data.events(), &refs, cfg.tree_depth, min_leaf)?;
    let features = mg
        .trees
        .iter()
        .map(|g| {
            if cfg.binary_features {
                Feature::Indicator(g.clone())
            } else {
                Feature::Expression(g.clone())
            }
        })
        .collect();
    tree.with_features(features)
}

/// Greedy-mode fitness of `mg` on `data` under `plan`.
pub fn gfc_fitness(
    mg: &MultiGenotype,
    data: &SurvivalDataset,
    plan: &SplitPlan,
    tree_depth: usize,
    binary_features: bool,
) -> Result<FitnessValue> {
    Evaluator::new(
        data,
        plan,
        FitnessConfig::greedy(tree_depth, binary_features),
    )?
    .evaluate(mg)
}

/// Evolved-mode fitness of `mg` on `data` under `plan`.
pub fn evolved_fitness(
    mg: &MultiGenotype,
    data: &SurvivalDataset,
    plan: &SplitPlan,
) -> Result<FitnessValue> {
    Evaluator::new(data, plan, FitnessConfig::evolved())?.evaluate(mg)
}
