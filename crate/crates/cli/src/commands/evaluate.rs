use std::path::Path;

use rayon::prelude::*;
use survgp_core::data::{bootstrap_resample, SurvivalDataset};
use survgp_core::estimators::{Cohort, StepFunction};
use survgp_core::metrics::{bootstrap_ci, concordance_index, ConfidenceInterval, IbsContext};
use survgp_core::rng::CounterRng;
use survgp_core::tree::SurvivalTree;

use crate::error::{CliError, Result};
use crate::io::{fmt_f64, load_dataset, read_json, write_rows, Schema};
use crate::model::ModelFile;

#[derive(Debug, Clone, PartialEq)]
pub struct MemberReport {
    pub id: usize,
    pub complexity: u32,
    pub ibs: ConfidenceInterval,
    pub cindex: ConfidenceInterval,
}

pub const REPORT_HEADER: [&str; 8] = [
    "member",
    "complexity",
    "ibs_mean",
    "ibs_lo",
    "ibs_hi",
    "cindex_mean",
    "cindex_lo",
    "cindex_hi",
];

/// A tree reduced to leaf curves, one risk per leaf, and each patient's leaf.
struct Scored<'a> {
    curves: Vec<&'a StepFunction>,
    leaf_risk: Vec<f64>,
    assign: Vec<usize>,
}

impl<'a> Scored<'a> {
    fn new(tree: &'a SurvivalTree, data: &SurvivalDataset, horizon: f64) -> Self {
        let leaves = tree.leaf_positions();
        let curves: Vec<&StepFunction> = leaves
            .iter()
            .map(|&p| &tree.leaf(p).expect("leaf").survival)
            .collect();
        let leaf_risk = curves.iter().map(|c| -c.integral(0.0, horizon)).collect();
        let assign = (0..data.n())
            .map(|i| {
                let p = tree.leaf_of(data.row(i));
                leaves.binary_search(&p).expect("leaf position")
            })
            .collect();
        Self {
            curves,
            leaf_risk,
            assign,
        }
    }
}

fn check_covariates(model: &ModelFile, data: &SurvivalDataset, path: &Path) -> Result<()> {
    if model.covariates != data.names() {
        return Err(CliError::Schema {
            path: path.to_owned(),
            message: format!(
                "covariates {:?} do not match the model's {:?}",
                data.names(),
                model.covariates
            ),
        });
    }
    Ok(())
}

/// IBS of every member on the whole of `data`.
pub fn point_ibs(
    model: &ModelFile,
    trees: &[SurvivalTree],
    data: &SurvivalDataset,
) -> Result<Vec<f64>> {
    let train = Cohort::new(&model.training.times, &model.training.events)?;
    let ctx = IbsContext::new(train, Cohort::new(data.times(), data.events())?)?;
    Ok(trees
        .iter()
        .map(|t| {
            let s = Scored::new(t, data, model.horizon);
            ctx.score(&s.curves, &s.assign)
        })
        .collect())
}

/// Bootstrap mean and 95% interval of IBS and Harrell's C-index for every
/// member. Replicate `b` resamples with a seed derived from `(seed, b)`.
pub fn bootstrap_report(
    model: &ModelFile,
    data: &SurvivalDataset,
    data_path: &Path,
    replicates: usize,
    seed: u64,
) -> Result<Vec<MemberReport>> {
    if replicates == 0 {
        return Err(CliError::Usage(
            "bootstrap needs at least one replicate".into(),
        ));
    }
    check_covariates(model, data, data_path)?;
    let trees = model.trees()?;
    let scored: Vec<Scored> = trees
        .iter()
        .map(|t| Scored::new(t, data, model.horizon))
        .collect();
    let train = Cohort::new(&model.training.times, &model.training.events)?;
    let root = CounterRng::new(seed);

    let replicas: Vec<Vec<(f64, f64)>> = (0..replicates)
        .into_par_iter()
        .map(|b| -> Result<Vec<(f64, f64)>> {
            let idx = bootstrap_resample(data.n(), root.derive(b as u64).next_u64());
            let times: Vec<f64> = idx.iter().map(|&i| data.times()[i]).collect();
            let events: Vec<bool> = idx.iter().map(|&i| data.events()[i]).collect();
            let ctx = IbsContext::new(train, Cohort::new(&times, &events)?)?;
            scored
                .iter()
                .map(|s| {
                    let assign: Vec<usize> = idx.iter().map(|&i| s.assign[i]).collect();
                    let risks: Vec<f64> = assign.iter().map(|&l| s.leaf_risk[l]).collect();
                    Ok((
                        ctx.score(&s.curves, &assign),
                        concordance_index(&risks, &times, &events)?,
                    ))
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    model
        .members
        .iter()
        .enumerate()
        .map(|(m, member)| {
            let ibs: Vec<f64> = replicas.iter().map(|r| r[m].0).collect();
            let cindex: Vec<f64> = replicas.iter().map(|r| r[m].1).collect();
            Ok(MemberReport {
                id: member.id,
                complexity: member.complexity,
                ibs: bootstrap_ci(&ibs)?,
                cindex: bootstrap_ci(&cindex)?,
            })
        })
        .collect()
}

pub fn report_rows(report: &[MemberReport]) -> impl Iterator<Item = Vec<String>> + '_ {
    report.iter().map(|r| {
        vec![
            r.id.to_string(),
            r.complexity.to_string(),
            fmt_f64(r.ibs.mean),
            fmt_f64(r.ibs.lower),
            fmt_f64(r.ibs.upper),
            fmt_f64(r.cindex.mean),
            fmt_f64(r.cindex.lower),
            fmt_f64(r.cindex.upper),
        ]
    })
}

/// `evaluate`: loads the model, reads the covariates it names from `data`,
/// and writes the bootstrap report to `out`.
pub fn evaluate(
    model_path: &Path,
    data_path: &Path,
    schema: &Schema,
    replicates: usize,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let model: ModelFile = read_json(model_path)?;
    let schema = Schema {
        covariates: Some(model.covariates.clone()),
        ..schema.clone()
    };
    let data = load_dataset(data_path, &schema)?;
    let report = bootstrap_report(&model, &data, data_path, replicates, seed)?;
    write_rows(out, &REPORT_HEADER, report_rows(&report))
}
