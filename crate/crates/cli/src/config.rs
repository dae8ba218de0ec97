//! Experiment configuration (JSON).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use survgp_core::data::SurvivalDataset;
use survgp_core::evolution::{LinkageKind, RunConfig};
use survgp_core::expr::OperatorSet;
use survgp_core::fitness::FitnessMode;
use survgp_core::xor::{balanced_half_width, generate_xor_survival, XorParams};

use crate::error::{CliError, Result};
use crate::io::{load_dataset, Schema};

/// Parameters of a synthetic XOR cohort.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XorSpec {
    pub n: usize,
    pub seed: u64,
    #[serde(default = "balanced_half_width")]
    pub half_width: f64,
    #[serde(default = "one")]
    pub scale_exp: f64,
    #[serde(default = "two")]
    pub shape_gamma: f64,
    #[serde(default = "one")]
    pub scale_gamma: f64,
    #[serde(default = "censor_rates")]
    pub censor_rates: (f64, f64),
}

fn one() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}
fn censor_rates() -> (f64, f64) {
    (0.2, 0.1)
}

impl XorSpec {
    pub fn params(&self) -> XorParams {
        XorParams {
            n: self.n,
            seed: self.seed,
            half_width: self.half_width,
            scale_exp: self.scale_exp,
            shape_gamma: self.shape_gamma,
            scale_gamma: self.scale_gamma,
            censor_rates: self.censor_rates,
        }
    }

    pub fn from_params(p: &XorParams) -> Self {
        Self {
            n: p.n,
            seed: p.seed,
            half_width: p.half_width,
            scale_exp: p.scale_exp,
            shape_gamma: p.shape_gamma,
            scale_gamma: p.scale_gamma,
            censor_rates: p.censor_rates,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    Csv {
        path: PathBuf,
        #[serde(default, flatten)]
        schema: Schema,
    },
    Xor(XorSpec),
}

impl DatasetSource {
    pub fn load(&self) -> Result<SurvivalDataset> {
        match self {
            DatasetSource::Csv { path, schema } => load_dataset(path, schema),
            DatasetSource::Xor(spec) => Ok(generate_xor_survival(&spec.params())?.dataset),
        }
    }

    fn resolve(&mut self, base: &Path) -> Result<()> {
        if let DatasetSource::Csv { path, .. } = self {
            if path.is_relative() {
                *path = base.join(&*path);
            }
            if !path.is_file() {
                return Err(CliError::Config(format!(
                    "dataset {} does not exist",
                    path.display()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    Evolved,
    GfcGreedy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkageName {
    Tree,
    Univariate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Internal cohort: searched on, split into training and validation.
    pub dataset: DatasetSource,
    /// External cohort, evaluated with bootstrap CIs after every repetition.
    #[serde(default)]
    pub external: Option<DatasetSource>,
    /// Single-split fitness and the engineered operator set by default.
    #[serde(default)]
    pub xor_mode: bool,
    #[serde(default = "default_mode")]
    pub mode: ModeName,
    #[serde(default = "default_population")]
    pub population_size: usize,
    #[serde(default = "default_generations")]
    pub max_generations: usize,
    #[serde(default = "default_stagnation")]
    pub stagnation_window: usize,
    #[serde(default = "default_budget")]
    pub uniqueness_budget: usize,
    #[serde(default = "yes")]
    pub swap_enabled: bool,
    /// GP-tree template depth; 3 for survival trees up to depth 2, else 2.
    #[serde(default)]
    pub template_depth: Option<usize>,
    /// Number of GP trees per individual (`K`).
    #[serde(default = "default_trees")]
    pub trees: usize,
    /// Survival-tree depth.
    #[serde(default = "default_tree_depth")]
    pub depth: usize,
    #[serde(default = "yes")]
    pub binary_features: bool,
    /// Comma-separated operator tokens; `+,-,*,/,^2,<=,NOT,AND,OR` when
    /// absent (`+,*,^2,<=` in XOR mode).
    #[serde(default)]
    pub operators: Option<String>,
    #[serde(default = "default_min_leaf")]
    pub min_leaf_fraction: f64,
    #[serde(default = "default_linkage")]
    pub linkage: LinkageName,
    /// Objective-space clusters restricting linkage learning and donors.
    #[serde(default = "default_clusters")]
    pub clusters: usize,
    /// Stalled generations before a forced improvement; off when absent.
    #[serde(default)]
    pub forced_improvement_after: Option<usize>,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    /// Shuffle splits in the fitness IQM; 25, or 1 in XOR mode.
    #[serde(default)]
    pub fitness_splits: Option<usize>,
    #[serde(default = "default_fraction")]
    pub fitness_test_fraction: f64,
    /// Internal cohort share held out for validation; 0 trains on all of it.
    #[serde(default = "default_fraction")]
    pub validation_fraction: f64,
    #[serde(default = "default_bootstrap")]
    pub bootstrap: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
}

fn default_mode() -> ModeName {
    ModeName::Evolved
}
fn default_population() -> usize {
    1024
}
fn default_generations() -> usize {
    50
}
fn default_stagnation() -> usize {
    5
}
fn default_budget() -> usize {
    1000
}
fn yes() -> bool {
    true
}
fn default_trees() -> usize {
    7
}
fn default_tree_depth() -> usize {
    3
}
fn default_min_leaf() -> f64 {
    0.02
}
fn default_linkage() -> LinkageName {
    LinkageName::Tree
}
fn default_clusters() -> usize {
    1
}
fn default_repetitions() -> usize {
    30
}
fn default_fraction() -> f64 {
    0.2
}
fn default_bootstrap() -> usize {
    1000
}
fn default_output() -> PathBuf {
    PathBuf::from("runs")
}

impl ExperimentConfig {
    /// Reads and validates a config; relative paths resolve against the
    /// config file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        let mut cfg: Self = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve(base)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve(&mut self, base: &Path) -> Result<()> {
        self.dataset.resolve(base)?;
        if let Some(ext) = &mut self.external {
            ext.resolve(base)?;
        }
        if self.output.is_relative() {
            self.output = base.join(&self.output);
        }
        Ok(())
    }

    pub fn template_depth(&self) -> usize {
        self.template_depth
            .unwrap_or(if self.depth <= 2 { 3 } else { 2 })
    }

    pub fn fitness_splits(&self) -> usize {
        self.fitness_splits
            .unwrap_or(if self.xor_mode { 1 } else { 25 })
    }

    pub fn operator_set(&self) -> Result<OperatorSet> {
        match &self.operators {
            Some(text) => OperatorSet::parse(text).map_err(|e| CliError::Config(e.to_string())),
            None if self.xor_mode => Ok(OperatorSet::xor_engineered()),
            None => Ok(OperatorSet::full()),
        }
    }

    /// Engine settings for one repetition.
    pub fn run_config(&self, seed: u64) -> Result<RunConfig> {
        Ok(RunConfig {
            mode: match self.mode {
                ModeName::Evolved => FitnessMode::Evolved,
                ModeName::GfcGreedy => FitnessMode::Greedy,
            },
            population_size: self.population_size,
            max_generations: self.max_generations,
            stagnation_window: self.stagnation_window,
            uniqueness_budget: self.uniqueness_budget,
            swap_enabled: self.swap_enabled,
            template_depth: self.template_depth(),
            trees: self.trees,
            tree_depth: self.depth,
            binary_features: self.binary_features,
            operators: self.operator_set()?,
            min_leaf_fraction: self.min_leaf_fraction,
            linkage: match self.linkage {
                LinkageName::Tree => LinkageKind::Tree,
                LinkageName::Univariate => LinkageKind::Univariate,
            },
            forced_improvement_after: self.forced_improvement_after,
            clusters: self.clusters,
            seed,
            record_acceptance: false,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(CliError::Config(m));
        if self.repetitions == 0 {
            return fail("repetitions must be at least 1".into());
        }
        if self.bootstrap == 0 {
            return fail("bootstrap must be at least 1".into());
        }
        if self.fitness_splits() == 0 {
            return fail("fitness_splits must be at least 1".into());
        }
        if !(self.fitness_test_fraction > 0.0 && self.fitness_test_fraction < 1.0) {
            return fail(format!(
                "fitness_test_fraction {} not in (0, 1)",
                self.fitness_test_fraction
            ));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return fail(format!(
                "validation_fraction {} not in [0, 1)",
                self.validation_fraction
            ));
        }
        self.run_config(0)?
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))
    }
}
