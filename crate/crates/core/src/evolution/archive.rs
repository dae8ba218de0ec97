use alloc::vec::Vec;

use crate::error::Result;
use crate::expr::MultiGenotype;
use crate::fitness::FitnessValue;
use crate::metrics::{hypervolume_2d, ObjectivePoint};

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub mg: MultiGenotype,
    pub fitness: FitnessValue,
    /// Stratification signature on the whole cohort; filled for run outputs.
    pub signature: Vec<u8>,
}

impl Individual {
    pub fn point(&self) -> ObjectivePoint {
        self.fitness.point()
    }
}

/// Elitist set of mutually non-dominated individuals, kept sorted by
/// complexity.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParetoArchive {
    members: Vec<Individual>,
}

impl ParetoArchive {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn members(&self) -> &[Individual] {
        &self.members
    }

    pub fn into_members(self) -> Vec<Individual> {
        self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn points(&self) -> Vec<ObjectivePoint> {
        self.members.iter().map(Individual::point).collect()
    }

    /// Whether [`ParetoArchive::update`] would insert a point with these
    /// objectives. Identical objectives are rejected, so the first arrival wins.
    pub fn would_accept(&self, p: ObjectivePoint) -> bool {
        !p.ibs.is_nan() && !self.members.iter().any(|m| m.point().weakly_dominates(&p))
    }

    /// Inserts `candidate` unless a member weakly dominates it; evicts every
    /// member it dominates.
    pub fn update(&mut self, candidate: Individual) -> bool {
        let p = candidate.point();
        if !self.would_accept(p) {
            return false;
        }
        self.members.retain(|m| !p.dominates(&m.point()));
        let at = self.members.partition_point(|m| {
            let q = m.point();
            (q.complexity, q.ibs) < (p.complexity, p.ibs)
        });
        self.members.insert(at, candidate);
        true
    }

    pub fn is_mutually_non_dominated(&self) -> bool {
        let pts = self.points();
        pts.iter().enumerate().all(|(i, a)| {
            pts.iter()
                .enumerate()
                .all(|(j, b)| i == j || !a.weakly_dominates(b))
        })
    }

    pub fn hypervolume(&self, reference: ObjectivePoint) -> Result<f64> {
        hypervolume_2d(&self.points(), reference)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn ind(ibs: f64, complexity: u32) -> Individual {
        Individual {
            mg: MultiGenotype::new(Vec::new(), true),
            fitness: FitnessValue {
                ibs_iqm: ibs,
                complexity,
                per_split: vec![ibs],
            },
            signature: Vec::new(),
        }
    }

    #[test]
    fn update_rules() {
        let mut a = ParetoArchive::new();
        assert!(a.update(ind(0.3, 5)));
        assert!(a.update(ind(0.4, 2)));
        assert!(!a.update(ind(0.35, 6)), "dominated");
        assert!(!a.update(ind(0.3, 5)), "identical objectives");
        assert!(a.update(ind(0.2, 2)), "dominates both");
        assert_eq!(a.points(), vec![ObjectivePoint::new(0.2, 2)]);
        assert!(a.update(ind(0.1, 9)));
        assert!(a.update(ind(0.5, 1)));
        assert!(a.is_mutually_non_dominated());
        let c: Vec<u32> = a.points().iter().map(|p| p.complexity).collect();
        assert_eq!(c, vec![1, 2, 9]);
        assert!(
            (a.hypervolume(ObjectivePoint::new(1.0, 10)).unwrap() - (0.5 * 9.0 + 0.3 * 8.0 + 0.1))
                .abs()
                < 1e-12
        );
    }
}
