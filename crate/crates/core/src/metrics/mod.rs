//! Censoring-aware predictive metrics, aggregation and multi-objective
//! quality indicators.

mod aggregate;
mod brier;
mod concordance;
mod pareto;

pub use aggregate::{bootstrap_ci, interquartile_mean, percentile, ConfidenceInterval};
pub use brier::{brier_score_at, integrated_brier, integrated_brier_per_patient, IbsContext};
pub use concordance::concordance_index;
pub use pareto::{attainment_surface, hypervolume_2d, Front, ObjectivePoint};
