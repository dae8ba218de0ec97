//! Per-individual variation: gene-pool optimal mixing and tree swapping.

use alloc::vec::Vec;

use super::archive::{Individual, ParetoArchive};
use crate::expr::{Genotype, MultiGenotype, Symbol};
use crate::fitness::{Evaluator, FeatureColumn, FitnessValue};
use crate::metrics::ObjectivePoint;
use crate::rng::CounterRng;

/// Population entry: an individual plus its cached feature columns.
#[derive(Debug, Clone)]
pub struct Member {
    pub mg: MultiGenotype,
    pub fitness: FitnessValue,
    pub cols: Vec<FeatureColumn>,
    /// Consecutive generations without an improving change.
    pub stall: usize,
}

impl Member {
    pub fn to_individual(&self) -> Individual {
        Individual {
            mg: self.mg.clone(),
            fitness: self.fitness.clone(),
            signature: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcceptanceRecord {
    pub generation: usize,
    pub individual: usize,
    pub old: ObjectivePoint,
    pub new: ObjectivePoint,
    /// The new point entered the archive view at acceptance time.
    pub archived: bool,
}

/// Whether two templates compute the same expression (same active symbols).
pub fn same_active(a: &Genotype, b: &Genotype) -> bool {
    fn walk(a: &Genotype, b: &Genotype, p: usize) -> bool {
        let (sa, sb) = (a.symbols()[p], b.symbols()[p]);
        if !sa.same(&sb) {
            return false;
        }
        match sa {
            Symbol::Op(op) => walk(a, b, 2 * p + 1) && (op.arity() == 1 || walk(a, b, 2 * p + 2)),
            _ => true,
        }
    }
    a.depth() == b.depth() && walk(a, b, 0)
}

pub(crate) struct StepOutcome {
    pub member: Member,
    /// Points that entered the local archive view, in acceptance order.
    pub archived: Vec<Individual>,
    pub records: Vec<AcceptanceRecord>,
    pub draws: u64,
}

pub(crate) struct StepInput<'a> {
    pub index: usize,
    pub generation: usize,
    pub population: &'a [Member],
    /// Sorted indices this individual may take genes from.
    pub donors: &'a [usize],
    pub fos: &'a [Vec<Vec<usize>>],
    pub archive: &'a ParetoArchive,
    pub swap_enabled: bool,
    /// Stall length after which a forced improvement is attempted.
    pub forced_improvement_after: Option<usize>,
    pub record: bool,
}

struct Stepper<'a, 'e> {
    ev: &'a Evaluator<'e>,
    input: &'a StepInput<'a>,
    cur: Member,
    local: ParetoArchive,
    out: Vec<Individual>,
    records: Vec<AcceptanceRecord>,
    improved: bool,
}

impl Stepper<'_, '_> {
    /// Tries `tree` in slot `k`; keeps it under the acceptance rule. With
    /// `strict`, equal objectives are not enough. Returns whether the change
    /// improved the individual.
    fn try_tree(&mut self, k: usize, tree: Genotype, strict: bool) -> bool {
        if same_active(&tree, &self.cur.mg.trees[k]) {
            // only inactive genes differ: identical fitness, accepted as neutral
            self.cur.mg.trees[k] = tree;
            return false;
        }
        let mut col = self.ev.column(&tree);
        let mut tree = tree;
        core::mem::swap(&mut self.cur.mg.trees[k], &mut tree);
        core::mem::swap(&mut self.cur.cols[k], &mut col);
        let fitness = self.ev.evaluate_columns(&self.cur.mg, &self.cur.cols);
        let old = self.cur.fitness.point();
        let new = fitness.point();
        let archived = self.local.would_accept(new);
        if archived {
            let ind = Individual {
                mg: self.cur.mg.clone(),
                fitness: fitness.clone(),
                signature: Vec::new(),
            };
            self.local.update(ind.clone());
            self.out.push(ind);
        }
        let better = if strict {
            new.dominates(&old)
        } else {
            new.weakly_dominates(&old)
        };
        if archived || better {
            self.cur.fitness = fitness;
            let improved = archived || new != old;
            self.improved |= improved;
            if self.input.record {
                self.records.push(AcceptanceRecord {
                    generation: self.input.generation,
                    individual: self.input.index,
                    old,
                    new,
                    archived,
                });
            }
            improved
        } else {
            core::mem::swap(&mut self.cur.mg.trees[k], &mut tree);
            core::mem::swap(&mut self.cur.cols[k], &mut col);
            false
        }
    }

    /// Pulls genes from an archive member that dominates the individual and
    /// stops at the first improvement; without one, the individual becomes a
    /// copy of that member.
    fn force_improvement(&mut self, order: &[(usize, usize)], rng: &mut CounterRng) {
        let here = self.cur.fitness.point();
        let dominating: Vec<&Individual> = self
            .input
            .archive
            .members()
            .iter()
            .filter(|m| m.point().dominates(&here))
            .collect();
        if dominating.is_empty() {
            return;
        }
        let donor = dominating[rng.below(dominating.len())].clone();
        for &(k, s) in order {
            let mut tree = self.cur.mg.trees[k].clone();
            tree.copy_from(&donor.mg.trees[k], &self.input.fos[k][s]);
            if self.try_tree(k, tree, true) {
                return;
            }
        }
        let old = self.cur.fitness.point();
        self.cur.cols = self.ev.columns_for(&donor.mg);
        self.cur.mg = donor.mg;
        self.cur.fitness = donor.fitness;
        if self.input.record {
            self.records.push(AcceptanceRecord {
                generation: self.input.generation,
                individual: self.input.index,
                old,
                new: self.cur.fitness.point(),
                archived: false,
            });
        }
    }
}

/// Uniform pick among `donors` other than `me`.
fn pick_donor(rng: &mut CounterRng, donors: &[usize], me: usize) -> usize {
    let at = donors.binary_search(&me);
    let others = donors.len() - usize::from(at.is_ok());
    if others == 0 {
        return me;
    }
    let d = rng.below(others);
    match at {
        Ok(pos) if d >= pos => donors[d + 1],
        _ => donors[d],
    }
}

/// Gene-pool optimal mixing over every (tree, subset) pair in random order,
/// then one swap attempt per tree slot.
pub(crate) fn vary(ev: &Evaluator<'_>, input: &StepInput<'_>, mut rng: CounterRng) -> StepOutcome {
    let me = &input.population[input.index];
    let mut st = Stepper {
        ev,
        input,
        cur: me.clone(),
        local: input.archive.clone(),
        out: Vec::new(),
        records: Vec::new(),
        improved: false,
    };
    let k_trees = st.cur.mg.k();

    let mut order: Vec<(usize, usize)> = input
        .fos
        .iter()
        .enumerate()
        .flat_map(|(k, subsets)| (0..subsets.len()).map(move |s| (k, s)))
        .collect();
    rng.shuffle(&mut order);
    for &(k, s) in &order {
        let donor = &input.population[pick_donor(&mut rng, input.donors, input.index)];
        let mut tree = st.cur.mg.trees[k].clone();
        tree.copy_from(&donor.mg.trees[k], &input.fos[k][s]);
        st.try_tree(k, tree, false);
    }

    if input.swap_enabled {
        for k in 0..k_trees {
            let donor = &input.population[pick_donor(&mut rng, input.donors, input.index)];
            let j = rng.below(donor.mg.k());
            st.try_tree(k, donor.mg.trees[j].clone(), false);
        }
    }

    st.cur.stall = if st.improved { 0 } else { st.cur.stall + 1 };
    if let Some(limit) = input.forced_improvement_after {
        if st.cur.stall > limit {
            rng.shuffle(&mut order);
            st.force_improvement(&order, &mut rng);
            st.cur.stall = 0;
        }
    }

    StepOutcome {
        member: st.cur,
        archived: st.out,
        records: st.records,
        draws: rng.draws(),
    }
}
