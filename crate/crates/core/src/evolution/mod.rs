//! Multi-objective GOMEA-style search over multi-genotypes.
//!
//! Each generation learns one linkage model per tree slot from the
//! population, then varies every individual against the start-of-generation
//! population and archive. Individuals vary independently (in parallel with
//! the `std` feature); the points each one archived locally are merged into
//! the shared archive in index order, so results do not depend on the
//! thread count.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::data::{SplitPlan, SurvivalDataset};
use crate::error::{Error, Result};
use crate::expr::{constant_pool, random_genotype, template_len, MultiGenotype, OperatorSet};
use crate::fitness::{Evaluator, FitnessCache, FitnessConfig, FitnessMode};
use crate::metrics::ObjectivePoint;
use crate::rng::CounterRng;

mod archive;
mod cluster;
mod linkage;
mod variation;

pub use archive::{Individual, ParetoArchive};
pub use cluster::{cluster_population, Clustering};
pub use linkage::{learn_linkage, normalized_mutual_information, LinkageKind};
pub use variation::{same_active, AcceptanceRecord, Member};

use variation::{vary, StepInput, StepOutcome};

/// Hypervolume gains at or below this count as stagnation.
pub const STAGNATION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: FitnessMode,
    pub population_size: usize,
    pub max_generations: usize,
    pub stagnation_window: usize,
    pub uniqueness_budget: usize,
    pub swap_enabled: bool,
    /// Generations without improvement before an individual is pulled
    /// toward a dominating archive member; `None` disables this.
    pub forced_improvement_after: Option<usize>,
    /// Objective-space clusters that restrict linkage learning and donors;
    /// 1 mixes the whole population.
    pub clusters: usize,
    /// Depth of every GP template.
    pub template_depth: usize,
    /// Number of GP trees per individual (`K`).
    pub trees: usize,
    /// Survival-tree depth; evolved mode requires `trees == 2^tree_depth - 1`.
    pub tree_depth: usize,
    /// Greedy mode: reduce features to 0/1.
    pub binary_features: bool,
    pub operators: OperatorSet,
    pub min_leaf_fraction: f64,
    pub linkage: LinkageKind,
    pub seed: u64,
    /// Keep every accepted non-neutral variation in the result.
    pub record_acceptance: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: FitnessMode::Evolved,
            population_size: 1024,
            max_generations: 50,
            stagnation_window: 5,
            uniqueness_budget: 1000,
            swap_enabled: true,
            forced_improvement_after: None,
            clusters: 1,
            template_depth: 3,
            trees: 3,
            tree_depth: 2,
            binary_features: true,
            operators: OperatorSet::full(),
            min_leaf_fraction: 0.02,
            linkage: LinkageKind::Tree,
            seed: 0,
            record_acceptance: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.population_size == 0 || self.max_generations == 0 || self.stagnation_window == 0 {
            return fail(String::from(
                "population_size, max_generations and stagnation_window must be positive",
            ));
        }
        if !(1..=8).contains(&self.template_depth) {
            return fail(alloc::format!(
                "template depth {} not in 1..=8",
                self.template_depth
            ));
        }
        if self.trees == 0 || self.tree_depth == 0 {
            return fail(String::from("trees and tree_depth must be positive"));
        }
        if !(self.min_leaf_fraction >= 0.0 && self.min_leaf_fraction < 0.5) {
            return fail(alloc::format!(
                "min_leaf_fraction {} not in [0, 0.5)",
                self.min_leaf_fraction
            ));
        }
        if self.clusters == 0 {
            return fail(String::from("clusters must be at least 1"));
        }
        match self.mode {
            FitnessMode::Evolved => {
                if self.tree_depth > 15 || self.trees + 1 != 1usize << self.tree_depth {
                    return fail(alloc::format!(
                        "evolved trees of depth {} need K = {} expressions, got {}",
                        self.tree_depth,
                        (1u64 << self.tree_depth.min(63)) - 1,
                        self.trees
                    ));
                }
            }
            FitnessMode::Greedy => {
                if self.trees > 64 {
                    return fail(String::from("at most 64 features"));
                }
            }
        }
        Ok(())
    }

    pub fn fitness_config(&self) -> FitnessConfig {
        FitnessConfig {
            mode: self.mode,
            tree_depth: self.tree_depth,
            binary_features: self.mode == FitnessMode::Evolved || self.binary_features,
            min_leaf_fraction: self.min_leaf_fraction,
        }
    }

    /// Worst IBS (1) and the largest possible complexity.
    pub fn reference_point(&self) -> ObjectivePoint {
        ObjectivePoint::new(1.0, (self.trees * template_len(self.template_depth)) as u32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    GenerationCap,
    Stagnation,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::GenerationCap => "generation cap",
            Termination::Stagnation => "stagnation",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub generation: usize,
    pub hypervolume: f64,
    pub archive_size: usize,
    /// Cumulative fitness evaluations.
    pub evaluations: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct InitStats {
    pub resamples: usize,
    pub budget_remaining: usize,
    pub distinct_signatures: usize,
}

/// Random draws consumed per purpose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RngAudit {
    pub seed: u64,
    pub init_draws: u64,
    pub variation_draws: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    /// Final archive ordered by complexity, with signatures filled in.
    pub archive: Vec<Individual>,
    /// Generation 0 is the initial population.
    pub trace: Vec<TraceRow>,
    pub termination: Termination,
    pub init: InitStats,
    pub rng_audit: RngAudit,
    pub acceptance: Vec<AcceptanceRecord>,
    /// Archive updates after which some member weakly dominated another
    /// (checked when recording acceptance).
    pub archive_violations: u64,
}

fn random_multi(cfg: &RunConfig, d: usize, pool: &[f64], rng: &mut CounterRng) -> MultiGenotype {
    let trees = (0..cfg.trees)
        .map(|_| random_genotype(cfg.template_depth, &cfg.operators, d, pool, rng))
        .collect();
    MultiGenotype::new(trees, cfg.fitness_config().binary_features)
}

/// Samples the initial population. A draw whose stratification repeats an
/// accepted one is redrawn while the shared budget lasts.
pub fn initialize_population(
    cfg: &RunConfig,
    ev: &Evaluator<'_>,
    rng: &mut CounterRng,
) -> (Vec<Member>, InitStats) {
    let pool = constant_pool(ev.covariate_columns());
    let d = ev.data().d();
    let mut budget = cfg.uniqueness_budget;
    let mut seen: BTreeSet<Vec<u8>> = BTreeSet::new();
    let mut stats = InitStats::default();
    let mut drafts = Vec::with_capacity(cfg.population_size);
    for _ in 0..cfg.population_size {
        loop {
            let mg = random_multi(cfg, d, &pool, rng);
            let cols = ev.columns_for(&mg);
            let sig = ev.signature(&mg, &cols);
            if seen.contains(&sig) && budget > 0 {
                budget -= 1;
                stats.resamples += 1;
                continue;
            }
            seen.insert(sig);
            drafts.push((mg, cols));
            break;
        }
    }
    stats.budget_remaining = budget;
    stats.distinct_signatures = seen.len();

    let evaluate = |(mg, cols): (MultiGenotype, Vec<crate::fitness::FeatureColumn>)| {
        let fitness = ev.evaluate_columns(&mg, &cols);
        Member {
            mg,
            fitness,
            cols,
            stall: 0,
        }
    };
    #[cfg(feature = "std")]
    let members = {
        use rayon::prelude::*;
        drafts.into_par_iter().map(evaluate).collect()
    };
    #[cfg(not(feature = "std"))]
    let members = drafts.into_iter().map(evaluate).collect();
    (members, stats)
}

fn linkage_models(pop: &[Member], members: &[usize], kind: LinkageKind) -> Vec<Vec<Vec<usize>>> {
    let k = pop[0].mg.k();
    (0..k)
        .map(|slot| {
            let trees: Vec<&crate::expr::Genotype> =
                members.iter().map(|&i| &pop[i].mg.trees[slot]).collect();
            learn_linkage(&trees, kind)
        })
        .collect()
}

/// Runs the search with a fresh evaluator (and, with `std`, a shared cache).
pub fn run(cfg: &RunConfig, data: &SurvivalDataset, plan: &SplitPlan) -> Result<RunResult> {
    cfg.validate()?;
    let ev = Evaluator::new(data, plan, cfg.fitness_config())?;
    #[cfg(feature = "std")]
    let ev = ev.with_cache(alloc::boxed::Box::new(
        crate::fitness::MemoryCache::default(),
    ));
    run_with(cfg, &ev)
}

/// Runs the search with a caller-supplied cache.
pub fn run_with_cache(
    cfg: &RunConfig,
    data: &SurvivalDataset,
    plan: &SplitPlan,
    cache: alloc::boxed::Box<dyn FitnessCache + '_>,
) -> Result<RunResult> {
    cfg.validate()?;
    let ev = Evaluator::new(data, plan, cfg.fitness_config())?.with_cache(cache);
    run_with(cfg, &ev)
}

fn run_with(cfg: &RunConfig, ev: &Evaluator<'_>) -> Result<RunResult> {
    if cfg.fitness_config() != *ev.config() {
        return Err(Error::Config(String::from(
            "evaluator does not match the run configuration",
        )));
    }
    let root = CounterRng::new(cfg.seed);
    let mut init_rng = root.derive_named("init");
    let (mut pop, init) = initialize_population(cfg, ev, &mut init_rng);
    if let Some(m) = pop.first() {
        ev.check(&m.mg)?;
    }
    let reference = cfg.reference_point();
    let mut archive = ParetoArchive::new();
    let mut violations = 0u64;
    for m in &pop {
        archive.update(m.to_individual());
        if cfg.record_acceptance && !archive.is_mutually_non_dominated() {
            violations += 1;
        }
    }
    let mut trace = alloc::vec![TraceRow {
        generation: 0,
        hypervolume: archive.hypervolume(reference)?,
        archive_size: archive.len(),
        evaluations: ev.evaluations(),
    }];
    let mut best_hv = trace[0].hypervolume;
    let mut stall = 0;
    let mut audit = RngAudit {
        seed: cfg.seed,
        init_draws: init_rng.draws(),
        variation_draws: 0,
    };
    let mut acceptance = Vec::new();
    let variation_root = root.derive_named("variation");
    let mut termination = Termination::GenerationCap;

    for generation in 1..=cfg.max_generations {
        let gen_rng = variation_root.derive(generation as u64);
        let points: Vec<ObjectivePoint> = pop.iter().map(|m| m.fitness.point()).collect();
        let mut cluster_rng = gen_rng.derive_named("clusters");
        let clustering = cluster_population(&points, cfg.clusters, &mut cluster_rng);
        audit.variation_draws += cluster_rng.draws();
        let fos: Vec<Vec<Vec<Vec<usize>>>> = clustering
            .members
            .iter()
            .map(|m| linkage_models(&pop, m, cfg.linkage))
            .collect();
        let step = |index: usize| -> StepOutcome {
            let home = clustering.home[index];
            let input = StepInput {
                index,
                generation,
                population: &pop,
                donors: &clustering.members[home],
                fos: &fos[home],
                archive: &archive,
                swap_enabled: cfg.swap_enabled,
                forced_improvement_after: cfg.forced_improvement_after,
                record: cfg.record_acceptance,
            };
            vary(ev, &input, gen_rng.derive(index as u64))
        };
        #[cfg(feature = "std")]
        let outcomes: Vec<StepOutcome> = {
            use rayon::prelude::*;
            (0..pop.len()).into_par_iter().map(step).collect()
        };
        #[cfg(not(feature = "std"))]
        let outcomes: Vec<StepOutcome> = (0..pop.len()).map(step).collect();

        let mut next = Vec::with_capacity(pop.len());
        for out in outcomes {
            audit.variation_draws += out.draws;
            for cand in out.archived {
                archive.update(cand);
                if cfg.record_acceptance && !archive.is_mutually_non_dominated() {
                    violations += 1;
                }
            }
            acceptance.extend(out.records);
            next.push(out.member);
        }
        pop = next;

        let hv = archive.hypervolume(reference)?;
        trace.push(TraceRow {
            generation,
            hypervolume: hv,
            archive_size: archive.len(),
            evaluations: ev.evaluations(),
        });
        log::debug!(
            "generation {generation}: hypervolume {hv}, archive {}",
            archive.len()
        );
        if hv > best_hv + STAGNATION_TOLERANCE {
            best_hv = hv;
            stall = 0;
        } else {
            stall += 1;
            if stall >= cfg.stagnation_window {
                termination = Termination::Stagnation;
                break;
            }
        }
    }

    let mut members = archive.into_members();
    for m in &mut members {
        let cols = ev.columns_for(&m.mg);
        m.signature = ev.signature(&m.mg, &cols);
    }
    Ok(RunResult {
        archive: members,
        trace,
        termination,
        init,
        rng_audit: audit,
        acceptance,
        archive_violations: violations,
    })
}
