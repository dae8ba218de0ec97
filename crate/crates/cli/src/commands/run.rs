use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use survgp_core::data::{stratified_shuffle_splits, SurvivalDataset};
use survgp_core::evolution::{run, InitStats, RunResult};
use survgp_core::expr::to_named_string;
use survgp_core::rng::CounterRng;

use crate::commands::evaluate::{bootstrap_report, point_ibs, report_rows, REPORT_HEADER};
use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::io::{fmt_f64, write_json, write_rows};
use crate::model::{fit_members, mode_name, ModelFile, TOOLKIT, VERSION};

pub const MANIFEST: &str = "manifest.json";
pub const RESULT: &str = "result.json";
pub const MODEL: &str = "model.json";
pub const HYPERVOLUME: &str = "hypervolume.csv";
pub const EVALUATION: &str = "evaluation.csv";
pub const FAILED: &str = "FAILED";

/// Seeds of repetition `r`: every stream derives from `(master, r)`, so a
/// repetition can be re-run alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepetitionSeeds {
    pub validation_split: u64,
    pub fitness_splits: u64,
    pub evolution: u64,
    pub bootstrap: u64,
}

impl RepetitionSeeds {
    pub fn derive(master: u64, r: usize) -> Self {
        let rep = CounterRng::new(master).derive(r as u64);
        let seed = |name: &str| rep.derive_named(name).next_u64();
        Self {
            validation_split: seed("validation-split"),
            fitness_splits: seed("fitness-splits"),
            evolution: seed("evolution"),
            bootstrap: seed("bootstrap"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionEntry {
    pub index: usize,
    pub dir: String,
    pub seeds: RepetitionSeeds,
    /// "ok" or "failed".
    pub status: String,
    #[serde(default)]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub toolkit: String,
    pub version: String,
    pub master_seed: u64,
    pub config: ExperimentConfig,
    pub repetitions: Vec<RepetitionEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub generation: usize,
    pub hypervolume: f64,
    pub archive_size: usize,
    pub evaluations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveEntry {
    pub id: usize,
    pub complexity: u32,
    pub ibs: f64,
    pub per_split: Vec<f64>,
    pub expressions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitEntry {
    pub resamples: usize,
    pub budget_remaining: usize,
    pub distinct_signatures: usize,
}

impl From<InitStats> for InitEntry {
    fn from(s: InitStats) -> Self {
        Self {
            resamples: s.resamples,
            budget_remaining: s.budget_remaining,
            distinct_signatures: s.distinct_signatures,
        }
    }
}

/// Serialized run outcome of one repetition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub repetition: usize,
    pub seeds: RepetitionSeeds,
    pub mode: String,
    pub training_size: usize,
    pub validation_size: usize,
    pub termination: String,
    pub reference: (f64, u32),
    pub init: InitEntry,
    pub rng_draws: (u64, u64),
    pub trace: Vec<TraceEntry>,
    pub archive: Vec<ArchiveEntry>,
}

impl RunRecord {
    pub fn final_hypervolume(&self) -> f64 {
        self.trace.last().map_or(0.0, |t| t.hypervolume)
    }
}

fn record(
    r: usize,
    seeds: RepetitionSeeds,
    cfg: &ExperimentConfig,
    res: &RunResult,
    train: &SurvivalDataset,
    val: usize,
) -> Result<RunRecord> {
    let reference = cfg.run_config(seeds.evolution)?.reference_point();
    Ok(RunRecord {
        repetition: r,
        seeds,
        mode: mode_name(cfg.run_config(0)?.mode).into(),
        training_size: train.n(),
        validation_size: val,
        termination: res.termination.as_str().into(),
        reference: (reference.ibs, reference.complexity),
        init: res.init.into(),
        rng_draws: (res.rng_audit.init_draws, res.rng_audit.variation_draws),
        trace: res
            .trace
            .iter()
            .map(|t| TraceEntry {
                generation: t.generation,
                hypervolume: t.hypervolume,
                archive_size: t.archive_size,
                evaluations: t.evaluations,
            })
            .collect(),
        archive: res
            .archive
            .iter()
            .enumerate()
            .map(|(id, m)| ArchiveEntry {
                id,
                complexity: m.fitness.complexity,
                ibs: m.fitness.ibs_iqm,
                per_split: m.fitness.per_split.clone(),
                expressions: m
                    .mg
                    .trees
                    .iter()
                    .map(|g| to_named_string(g, train.names()))
                    .collect(),
            })
            .collect(),
    })
}

fn repetition_dir(r: usize) -> String {
    format!("rep-{r:03}")
}

fn repetition(
    cfg: &ExperimentConfig,
    r: usize,
    internal: &SurvivalDataset,
    external: Option<(&SurvivalDataset, &Path)>,
    dir: &Path,
) -> Result<()> {
    let seeds = RepetitionSeeds::derive(cfg.seed, r);
    let (train, validation) = if cfg.validation_fraction > 0.0 {
        let outer = stratified_shuffle_splits(
            internal.events(),
            1,
            cfg.validation_fraction,
            seeds.validation_split,
        )?;
        let (tr, te) = &outer.pairs[0];
        (internal.select(tr)?, Some(internal.select(te)?))
    } else {
        (internal.clone(), None)
    };
    let plan = stratified_shuffle_splits(
        train.events(),
        cfg.fitness_splits(),
        cfg.fitness_test_fraction,
        seeds.fitness_splits,
    )?;
    let run_cfg = cfg.run_config(seeds.evolution)?;
    let result = run(&run_cfg, &train, &plan)?;
    log::info!(
        "repetition {r}: {} generations, {} archive members ({})",
        result.trace.len() - 1,
        result.archive.len(),
        result.termination.as_str()
    );

    let fitted = fit_members(&result.archive, &train, &run_cfg.fitness_config())?;
    let trees: Vec<_> = fitted.iter().map(|f| f.tree.clone()).collect();
    let mut model = ModelFile::new(
        run_cfg.mode,
        &train,
        fitted.into_iter().map(|f| f.dto).collect(),
    );
    if let Some(val) = &validation {
        let scores = point_ibs(&model, &trees, val)?;
        for (m, ibs) in model.members.iter_mut().zip(scores) {
            m.validation_ibs = Some(ibs);
        }
    }
    if let Some((ext, path)) = external {
        let scores = point_ibs(&model, &trees, ext)?;
        for (m, ibs) in model.members.iter_mut().zip(scores) {
            m.external_ibs = Some(ibs);
        }
        let report = bootstrap_report(&model, ext, path, cfg.bootstrap, seeds.bootstrap)?;
        write_rows(&dir.join(EVALUATION), &REPORT_HEADER, report_rows(&report))?;
    }

    let rec = record(
        r,
        seeds,
        cfg,
        &result,
        &train,
        validation.as_ref().map_or(0, |v| v.n()),
    )?;
    write_rows(
        &dir.join(HYPERVOLUME),
        &["generation", "hypervolume", "archive_size", "evaluations"],
        rec.trace.iter().map(|t| {
            vec![
                t.generation.to_string(),
                fmt_f64(t.hypervolume),
                t.archive_size.to_string(),
                t.evaluations.to_string(),
            ]
        }),
    )?;
    write_json(&dir.join(MODEL), &model)?;
    write_json(&dir.join(RESULT), &rec)
}

/// `run`: every repetition gets its own directory under the output
/// directory. A failed repetition leaves a `FAILED` marker with the error and
/// does not stop the others; the manifest lists every repetition's status.
/// Repetitions run in parallel on the current rayon pool.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Manifest> {
    let internal = cfg.dataset.load()?;
    let external = cfg.external.as_ref().map(|e| e.load()).transpose()?;
    let external_path = match &cfg.external {
        Some(crate::config::DatasetSource::Csv { path, .. }) => path.clone(),
        _ => PathBuf::from("<synthetic>"),
    };
    if let Some(ext) = &external {
        if ext.names() != internal.names() {
            return Err(CliError::Schema {
                path: external_path,
                message: format!(
                    "covariates {:?} differ from the internal cohort's {:?}",
                    ext.names(),
                    internal.names()
                ),
            });
        }
    }
    fs::create_dir_all(&cfg.output).map_err(CliError::io(&cfg.output))?;

    let entries: Vec<RepetitionEntry> = (0..cfg.repetitions)
        .into_par_iter()
        .map(|r| {
            let name = repetition_dir(r);
            let dir = cfg.output.join(&name);
            let _ = fs::remove_file(dir.join(FAILED));
            let outcome = fs::create_dir_all(&dir)
                .map_err(CliError::io(&dir))
                .and_then(|_| {
                    repetition(
                        cfg,
                        r,
                        &internal,
                        external.as_ref().map(|e| (e, external_path.as_path())),
                        &dir,
                    )
                });
            let error = outcome.err().map(|e| {
                log::error!("repetition {r} failed: {e}");
                let _ = fs::write(dir.join(FAILED), format!("{e}\n"));
                e.to_string()
            });
            RepetitionEntry {
                index: r,
                dir: name,
                seeds: RepetitionSeeds::derive(cfg.seed, r),
                status: if error.is_none() { "ok" } else { "failed" }.into(),
                error,
            }
        })
        .collect();
    let manifest = Manifest {
        toolkit: TOOLKIT.into(),
        version: VERSION.into(),
        master_seed: cfg.seed,
        config: cfg.clone(),
        repetitions: entries,
    };
    write_json(&cfg.output.join(MANIFEST), &manifest)?;
    if let Some(failed) = manifest.repetitions.iter().find(|e| e.error.is_some()) {
        return Err(CliError::Runtime(format!(
            "repetition {} failed: {}",
            failed.index,
            failed.error.as_deref().unwrap_or_default()
        )));
    }
    Ok(manifest)
}
