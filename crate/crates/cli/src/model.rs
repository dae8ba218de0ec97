//! JSON form of a fitted archive: one survival tree per member plus the
//! training outcomes needed for censoring weights.

use serde::{Deserialize, Serialize};
use survgp_core::data::SurvivalDataset;
use survgp_core::estimators::StepFunction;
use survgp_core::evolution::Individual;
use survgp_core::expr::{to_named_string, Genotype, Operator, Symbol};
use survgp_core::fitness::{fit_tree, FitnessConfig, FitnessMode};
use survgp_core::tree::{Feature, Leaf, Node, SplitRule, SurvivalTree};

use crate::error::{CliError, Result};

pub const TOOLKIT: &str = "survgp";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SymbolDto {
    Const(f64),
    /// Operator token or `x<index>`.
    Token(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenotypeDto {
    pub depth: usize,
    pub symbols: Vec<SymbolDto>,
}

impl From<&Genotype> for GenotypeDto {
    fn from(g: &Genotype) -> Self {
        let symbols = g
            .symbols()
            .iter()
            .map(|s| match *s {
                Symbol::Op(op) => SymbolDto::Token(op.token().into()),
                Symbol::Var(j) => SymbolDto::Token(format!("x{j}")),
                Symbol::Const(c) => SymbolDto::Const(c),
            })
            .collect();
        Self {
            depth: g.depth(),
            symbols,
        }
    }
}

impl GenotypeDto {
    pub fn to_genotype(&self) -> Result<Genotype> {
        let symbols = self
            .symbols
            .iter()
            .map(|s| match s {
                SymbolDto::Const(c) => Ok(Symbol::Const(*c)),
                SymbolDto::Token(t) => {
                    if let Some(op) = Operator::from_token(t) {
                        Ok(Symbol::Op(op))
                    } else if let Some(j) = t.strip_prefix('x').and_then(|j| j.parse().ok()) {
                        Ok(Symbol::Var(j))
                    } else {
                        Err(CliError::Runtime(format!("unknown symbol '{t}'")))
                    }
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Genotype::new(self.depth, symbols)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureDto {
    Covariate(usize),
    Expression(GenotypeDto),
    Indicator(GenotypeDto),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NodeDto {
    Threshold {
        feature: usize,
        threshold: f64,
    },
    Expression {
        expression: GenotypeDto,
    },
    Leaf {
        size: usize,
        before: f64,
        knots: Vec<f64>,
        values: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeDto {
    pub max_depth: usize,
    pub features: Vec<FeatureDto>,
    pub nodes: Vec<Option<NodeDto>>,
}

impl From<&SurvivalTree> for TreeDto {
    fn from(t: &SurvivalTree) -> Self {
        let features = t
            .features()
            .iter()
            .map(|f| match f {
                Feature::Covariate(j) => FeatureDto::Covariate(*j),
                Feature::Expression(g) => FeatureDto::Expression(g.into()),
                Feature::Indicator(g) => FeatureDto::Indicator(g.into()),
            })
            .collect();
        let nodes = t
            .nodes()
            .iter()
            .map(|n| {
                n.as_ref().map(|n| match n {
                    Node::Split(SplitRule::Threshold { feature, threshold }) => {
                        NodeDto::Threshold {
                            feature: *feature,
                            threshold: *threshold,
                        }
                    }
                    Node::Split(SplitRule::Expression(g)) => NodeDto::Expression {
                        expression: g.into(),
                    },
                    Node::Leaf(l) => NodeDto::Leaf {
                        size: l.size,
                        before: l.survival.value_before_first(),
                        knots: l.survival.knots().to_vec(),
                        values: l.survival.values().to_vec(),
                    },
                })
            })
            .collect();
        Self {
            max_depth: t.max_depth(),
            features,
            nodes,
        }
    }
}

impl TreeDto {
    pub fn to_tree(&self) -> Result<SurvivalTree> {
        let features = self
            .features
            .iter()
            .map(|f| {
                Ok(match f {
                    FeatureDto::Covariate(j) => Feature::Covariate(*j),
                    FeatureDto::Expression(g) => Feature::Expression(g.to_genotype()?),
                    FeatureDto::Indicator(g) => Feature::Indicator(g.to_genotype()?),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let nodes = self
            .nodes
            .iter()
            .map(|n| {
                n.as_ref()
                    .map(|n| {
                        Ok(match n {
                            NodeDto::Threshold { feature, threshold } => {
                                Node::Split(SplitRule::Threshold {
                                    feature: *feature,
                                    threshold: *threshold,
                                })
                            }
                            NodeDto::Expression { expression } => {
                                Node::Split(SplitRule::Expression(expression.to_genotype()?))
                            }
                            NodeDto::Leaf {
                                size,
                                before,
                                knots,
                                values,
                            } => Node::Leaf(Leaf {
                                survival: StepFunction::new(
                                    knots.clone(),
                                    values.clone(),
                                    *before,
                                )?,
                                size: *size,
                            }),
                        })
                    })
                    .transpose()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SurvivalTree::new(self.max_depth, nodes, features)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberDto {
    pub id: usize,
    pub complexity: u32,
    /// Fitness IBS (interquartile mean over the fitness splits).
    pub fitness_ibs: f64,
    pub per_split: Vec<f64>,
    pub expressions: Vec<String>,
    pub genotypes: Vec<GenotypeDto>,
    /// Stratification signature as hex.
    pub signature: String,
    #[serde(default)]
    pub validation_ibs: Option<f64>,
    #[serde(default)]
    pub external_ibs: Option<f64>,
    pub tree: TreeDto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcomes {
    pub times: Vec<f64>,
    pub events: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub toolkit: String,
    pub version: String,
    pub mode: String,
    pub covariates: Vec<String>,
    /// Upper limit of the survival-curve area used as a risk score.
    pub horizon: f64,
    /// Training outcomes; the censoring distribution for IBS comes from here.
    pub training: Outcomes,
    /// Members ordered by complexity.
    pub members: Vec<MemberDto>,
}

pub fn mode_name(mode: FitnessMode) -> &'static str {
    match mode {
        FitnessMode::Evolved => "evolved",
        FitnessMode::Greedy => "greedy",
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// A fitted member: its tree plus the serialized form.
pub struct FittedMember {
    pub tree: SurvivalTree,
    pub dto: MemberDto,
}

/// Refits every archive member on `train`.
pub fn fit_members(
    archive: &[Individual],
    train: &SurvivalDataset,
    cfg: &FitnessConfig,
) -> Result<Vec<FittedMember>> {
    archive
        .iter()
        .enumerate()
        .map(|(id, m)| {
            let tree = fit_tree(&m.mg, train, cfg)?;
            let dto = MemberDto {
                id,
                complexity: m.fitness.complexity,
                fitness_ibs: m.fitness.ibs_iqm,
                per_split: m.fitness.per_split.clone(),
                expressions: m
                    .mg
                    .trees
                    .iter()
                    .map(|g| to_named_string(g, train.names()))
                    .collect(),
                genotypes: m.mg.trees.iter().map(GenotypeDto::from).collect(),
                signature: hex(&m.signature),
                validation_ibs: None,
                external_ibs: None,
                tree: (&tree).into(),
            };
            Ok(FittedMember { tree, dto })
        })
        .collect()
}

impl ModelFile {
    pub fn new(mode: FitnessMode, train: &SurvivalDataset, members: Vec<MemberDto>) -> Self {
        Self {
            toolkit: TOOLKIT.into(),
            version: VERSION.into(),
            mode: mode_name(mode).into(),
            covariates: train.names().to_vec(),
            horizon: train.times().iter().copied().fold(0.0, f64::max),
            training: Outcomes {
                times: train.times().to_vec(),
                events: train.events().to_vec(),
            },
            members,
        }
    }

    pub fn trees(&self) -> Result<Vec<SurvivalTree>> {
        self.members.iter().map(|m| m.tree.to_tree()).collect()
    }
}
