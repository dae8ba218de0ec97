use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use survgp_core::metrics::{attainment_surface, percentile, Front, ObjectivePoint};

use crate::commands::run::{Manifest, RunRecord, MANIFEST, MODEL, RESULT};
use crate::error::{CliError, Result};
use crate::io::{fmt_f64, read_json, write_json, write_rows};
use crate::model::ModelFile;

pub const ATTAINMENT: &str = "attainment.csv";
pub const HYPERVOLUME_STATS: &str = "hypervolume.json";
pub const BEST_MODELS: &str = "best_models.csv";

/// Completed repetition directories under `path`: the path itself when it
/// holds a result, otherwise the successful entries of its manifest.
pub fn completed_runs(path: &Path) -> Result<Vec<PathBuf>> {
    if path.join(RESULT).is_file() {
        return Ok(vec![path.to_owned()]);
    }
    let manifest_path = path.join(MANIFEST);
    if !manifest_path.is_file() {
        return Err(CliError::Usage(format!(
            "{} holds neither {RESULT} nor {MANIFEST}",
            path.display()
        )));
    }
    let manifest: Manifest = read_json(&manifest_path)?;
    Ok(manifest
        .repetitions
        .iter()
        .filter(|e| e.status == "ok")
        .map(|e| path.join(&e.dir))
        .filter(|d| d.join(RESULT).is_file())
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunHypervolume {
    pub run: String,
    pub hypervolume: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypervolumeStats {
    pub runs: Vec<RunHypervolume>,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestModel {
    pub complexity: u32,
    pub run: String,
    pub member: usize,
    pub ibs: f64,
    /// "external", "validation" or "fitness".
    pub source: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub surface: Front,
    pub hypervolume: HypervolumeStats,
    pub best: Vec<BestModel>,
}

pub fn aggregate_runs(dirs: &[PathBuf], level: f64) -> Result<Aggregate> {
    if dirs.is_empty() {
        return Err(CliError::Runtime("no completed runs".into()));
    }
    let mut fronts = Vec::new();
    let mut hv = Vec::new();
    let mut best: Vec<BestModel> = Vec::new();
    for dir in dirs {
        let rec: RunRecord = read_json(&dir.join(RESULT))?;
        let name = dir.display().to_string();
        let points: Vec<ObjectivePoint> = rec
            .archive
            .iter()
            .map(|m| ObjectivePoint::new(m.ibs, m.complexity))
            .collect();
        fronts.push(Front::non_dominated(&points));
        hv.push(RunHypervolume {
            run: name.clone(),
            hypervolume: rec.final_hypervolume(),
        });
        let model: ModelFile = read_json(&dir.join(MODEL))?;
        for m in &model.members {
            let (ibs, source) = match (m.external_ibs, m.validation_ibs) {
                (Some(e), _) => (e, "external"),
                (None, Some(v)) => (v, "validation"),
                (None, None) => (m.fitness_ibs, "fitness"),
            };
            let cand = BestModel {
                complexity: m.complexity,
                run: name.clone(),
                member: m.id,
                ibs,
                source,
            };
            match best.iter_mut().find(|b| b.complexity == m.complexity) {
                Some(b) if ibs < b.ibs => *b = cand,
                Some(_) => {}
                None => best.push(cand),
            }
        }
    }
    best.sort_by_key(|b| b.complexity);
    let surface = attainment_surface(&fronts, level)?;
    let mut sorted: Vec<f64> = hv.iter().map(|h| h.hypervolume).collect();
    sorted.sort_by(f64::total_cmp);
    let (q1, median, q3) = (
        percentile(&sorted, 0.25),
        percentile(&sorted, 0.5),
        percentile(&sorted, 0.75),
    );
    Ok(Aggregate {
        surface,
        hypervolume: HypervolumeStats {
            runs: hv,
            median,
            q1,
            q3,
            iqr: q3 - q1,
        },
        best,
    })
}

/// `aggregate`: pools runs and writes the attainment surface, hypervolume
/// statistics and the best model per complexity into `out`.
pub fn aggregate(paths: &[PathBuf], level: f64, out: &Path) -> Result<Aggregate> {
    let mut dirs = Vec::new();
    for p in paths {
        dirs.extend(completed_runs(p)?);
    }
    let agg = aggregate_runs(&dirs, level)?;
    fs::create_dir_all(out).map_err(CliError::io(out))?;
    write_rows(
        &out.join(ATTAINMENT),
        &["complexity", "ibs"],
        agg.surface
            .points()
            .iter()
            .map(|p| vec![p.complexity.to_string(), fmt_f64(p.ibs)]),
    )?;
    write_json(&out.join(HYPERVOLUME_STATS), &agg.hypervolume)?;
    write_rows(
        &out.join(BEST_MODELS),
        &["complexity", "run", "member", "ibs", "source"],
        agg.best.iter().map(|b| {
            vec![
                b.complexity.to_string(),
                b.run.clone(),
                b.member.to_string(),
                fmt_f64(b.ibs),
                b.source.to_string(),
            ]
        }),
    )?;
    Ok(agg)
}
