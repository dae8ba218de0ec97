//! Bi-objective (IBS, complexity) fronts, 2-D hypervolume and attainment surfaces.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Both objectives are minimized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectivePoint {
    pub ibs: f64,
    pub complexity: u32,
}

impl ObjectivePoint {
    pub fn new(ibs: f64, complexity: u32) -> Self {
        Self { ibs, complexity }
    }

    pub fn weakly_dominates(&self, other: &Self) -> bool {
        self.ibs <= other.ibs && self.complexity <= other.complexity
    }

    pub fn dominates(&self, other: &Self) -> bool {
        self.weakly_dominates(other) && (self.ibs < other.ibs || self.complexity < other.complexity)
    }
}

/// Mutually non-dominated set of points, ordered by complexity.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Front {
    points: Vec<ObjectivePoint>,
}

impl Front {
    /// Fails when any point weakly dominates another.
    pub fn new(points: Vec<ObjectivePoint>) -> Result<Self> {
        for (i, a) in points.iter().enumerate() {
            for (j, b) in points.iter().enumerate() {
                if i != j && a.weakly_dominates(b) {
                    return Err(Error::InvalidArgument(alloc::format!(
                        "({}, {}) weakly dominates ({}, {})",
                        a.ibs,
                        a.complexity,
                        b.ibs,
                        b.complexity
                    )));
                }
            }
        }
        let mut points = points;
        points.sort_by(|a, b| {
            a.complexity
                .cmp(&b.complexity)
                .then(a.ibs.total_cmp(&b.ibs))
        });
        Ok(Self { points })
    }

    /// The non-dominated subset of `points` (duplicates collapse to one).
    pub fn non_dominated(points: &[ObjectivePoint]) -> Self {
        let mut sorted = points.to_vec();
        sorted.sort_by(|a, b| {
            a.complexity
                .cmp(&b.complexity)
                .then(a.ibs.total_cmp(&b.ibs))
        });
        let mut kept: Vec<ObjectivePoint> = Vec::new();
        for p in sorted {
            // everything kept so far has complexity <= p's
            if kept.last().is_none_or(|last| p.ibs < last.ibs) {
                if kept
                    .last()
                    .is_some_and(|last| last.complexity == p.complexity)
                {
                    kept.pop();
                }
                kept.push(p);
            }
        }
        Self { points: kept }
    }

    pub fn points(&self) -> &[ObjectivePoint] {
        &self.points
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }
}

/// Area dominated by `points` and bounded by `reference`.
pub fn hypervolume_2d(points: &[ObjectivePoint], reference: ObjectivePoint) -> Result<f64> {
    if let Some(p) = points
        .iter()
        .find(|p| !p.weakly_dominates(&reference) || p.ibs.is_nan())
    {
        return Err(Error::BeyondReference {
            ibs: p.ibs,
            complexity: f64::from(p.complexity),
        });
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| {
        a.ibs
            .total_cmp(&b.ibs)
            .then(a.complexity.cmp(&b.complexity))
    });
    let mut area = 0.0;
    let mut ceiling = reference.complexity;
    for p in sorted {
        if p.complexity < ceiling {
            area += (reference.ibs - p.ibs) * f64::from(ceiling - p.complexity);
            ceiling = p.complexity;
        }
    }
    Ok(area)
}

/// Boundary attained by at least `ceil(level * R)` of the `R` runs: for each
/// complexity present anywhere, the smallest IBS that enough runs reach at
/// that complexity or below.
pub fn attainment_surface(fronts: &[Front], level: f64) -> Result<Front> {
    if fronts.is_empty() {
        return Err(Error::Empty);
    }
    if !(level > 0.0 && level <= 1.0) {
        return Err(Error::InvalidArgument(alloc::format!(
            "level {level} not in (0, 1]"
        )));
    }
    let runs = fronts.len();
    let needed = (libm::ceil(level * runs as f64) as usize).clamp(1, runs);
    let mut grid: Vec<u32> = fronts
        .iter()
        .flat_map(|f| f.points.iter().map(|p| p.complexity))
        .collect();
    grid.sort_unstable();
    grid.dedup();

    let mut surface = Vec::with_capacity(grid.len());
    for &c in &grid {
        let mut best: Vec<f64> = fronts
            .iter()
            .map(|f| {
                f.points
                    .iter()
                    .filter(|p| p.complexity <= c)
                    .map(|p| p.ibs)
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        best.sort_by(f64::total_cmp);
        let b = best[needed - 1];
        if b.is_finite() {
            surface.push(ObjectivePoint::new(b, c));
        }
    }
    Ok(Front::non_dominated(&surface))
}
