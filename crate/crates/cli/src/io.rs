//! CSV datasets and small file helpers.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use survgp_core::data::SurvivalDataset;

use crate::error::{CliError, Result};

/// Which CSV columns hold the outcome and the covariates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schema {
    #[serde(default = "default_time")]
    pub time: String,
    #[serde(default = "default_event")]
    pub event: String,
    /// Covariates in order; every other column when absent.
    #[serde(default)]
    pub covariates: Option<Vec<String>>,
    /// Columns skipped when `covariates` is absent.
    #[serde(default)]
    pub ignore: Vec<String>,
}

fn default_time() -> String {
    "time".into()
}

fn default_event() -> String {
    "event".into()
}

impl Default for Schema {
    fn default() -> Self {
        Self {
            time: default_time(),
            event: default_event(),
            covariates: None,
            ignore: Vec::new(),
        }
    }
}

pub fn load_dataset(path: &Path, schema: &Schema) -> Result<SurvivalDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(CliError::csv(path))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(CliError::csv(path))?
        .iter()
        .map(str::to_owned)
        .collect();
    let find = |name: &str| -> Result<usize> {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Schema {
                path: path.to_owned(),
                message: format!("missing column '{name}'"),
            })
    };
    let time_col = find(&schema.time)?;
    let event_col = find(&schema.event)?;
    let names: Vec<String> = match &schema.covariates {
        Some(c) => c.clone(),
        None => header
            .iter()
            .filter(|h| **h != schema.time && **h != schema.event && !schema.ignore.contains(h))
            .cloned()
            .collect(),
    };
    let cov_cols = names.iter().map(|n| find(n)).collect::<Result<Vec<_>>>()?;

    let ingest = |row: usize, column: &str, message: String| CliError::Ingest {
        path: path.to_owned(),
        message: format!("row {row}, column '{column}': {message}"),
    };
    let (mut covariates, mut times, mut events) = (Vec::new(), Vec::new(), Vec::new());
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(CliError::csv(path))?;
        let row = i + 1;
        let cell = |c: usize| record.get(c).unwrap_or("");
        let number = |c: usize| -> Result<f64> {
            let s = cell(c);
            match s.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ if s.is_empty() => Err(ingest(row, &header[c], "missing value".into())),
                _ => Err(ingest(
                    row,
                    &header[c],
                    format!("'{s}' is not a finite number"),
                )),
            }
        };
        let t = number(time_col)?;
        if t <= 0.0 {
            return Err(ingest(
                row,
                &header[time_col],
                format!("time {t} is not positive"),
            ));
        }
        times.push(t);
        events.push(match cell(event_col) {
            "0" => false,
            "1" => true,
            other => {
                return Err(ingest(
                    row,
                    &header[event_col],
                    format!("event '{other}' is not 0 or 1"),
                ))
            }
        });
        for &c in &cov_cols {
            covariates.push(number(c)?);
        }
    }
    Ok(SurvivalDataset::new(names, covariates, times, events)?)
}

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

pub fn write_dataset(
    path: &Path,
    data: &SurvivalDataset,
    extra: Option<(&str, &[String])>,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(CliError::csv(path))?;
    let mut header: Vec<&str> = data.names().iter().map(String::as_str).collect();
    header.extend(["time", "event"]);
    if let Some((name, _)) = extra {
        header.push(name);
    }
    w.write_record(&header).map_err(CliError::csv(path))?;
    for i in 0..data.n() {
        let mut rec: Vec<String> = data.row(i).iter().map(|&v| fmt_f64(v)).collect();
        rec.push(fmt_f64(data.times()[i]));
        rec.push(if data.events()[i] { "1" } else { "0" }.into());
        if let Some((_, values)) = extra {
            rec.push(values[i].clone());
        }
        w.write_record(&rec).map_err(CliError::csv(path))?;
    }
    w.flush().map_err(CliError::io(path))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(CliError::json(path))?;
    text.push('\n');
    fs::write(path, text).map_err(CliError::io(path))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    serde_json::from_str(&text).map_err(CliError::json(path))
}

pub fn write_rows(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(CliError::csv(path))?;
    w.write_record(header).map_err(CliError::csv(path))?;
    for r in rows {
        w.write_record(&r).map_err(CliError::csv(path))?;
    }
    w.flush().map_err(CliError::io(path))
}
