//! Survival trees with Kaplan-Meier leaves.
//!
//! Nodes live in heap layout (children of `i` at `2i + 1` and `2i + 2`).
//! A patient whose split evaluates true goes left.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write as _;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::estimators::StepFunction;
use crate::expr::{binary_output, evaluate, template_len, to_named_string, Genotype};

mod decode;
mod greedy;
mod strata;

pub(crate) use decode::depth_for_trees;
pub use decode::{decode_evolved, path_code, prune_by_counts, PrunedLayout};
pub use greedy::{greedy_induce, induce_on};
pub use strata::{
    signature_from_labels, stratification_signature, stratify_and_merge, Stratification,
};

/// Quantity a threshold split compares.
#[derive(Debug, Clone, PartialEq)]
pub enum Feature {
    Covariate(usize),
    /// Real-valued GP expression.
    Expression(Genotype),
    /// GP expression reduced to 0/1 by truthiness.
    Indicator(Genotype),
}

impl Feature {
    pub fn value(&self, row: &[f64]) -> f64 {
        match self {
            Feature::Covariate(j) => row[*j],
            Feature::Expression(g) => evaluate(g, row),
            Feature::Indicator(g) => f64::from(u8::from(binary_output(g, row))),
        }
    }

    pub fn label(&self, names: &[String]) -> String {
        match self {
            Feature::Covariate(j) => names
                .get(*j)
                .cloned()
                .unwrap_or_else(|| alloc::format!("x{j}")),
            Feature::Expression(g) | Feature::Indicator(g) => to_named_string(g, names),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SplitRule {
    /// Left when `features[feature] <= threshold`.
    Threshold { feature: usize, threshold: f64 },
    /// Left when the expression is truthy.
    Expression(Genotype),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Leaf {
    pub survival: StepFunction,
    /// Training patients that reached this leaf.
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Split(SplitRule),
    Leaf(Leaf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalTree {
    max_depth: usize,
    nodes: Vec<Option<Node>>,
    features: Vec<Feature>,
}

impl SurvivalTree {
    /// Checks that the nodes form one rooted tree whose paths all end in leaves.
    pub fn new(max_depth: usize, nodes: Vec<Option<Node>>, features: Vec<Feature>) -> Result<Self> {
        if nodes.len() != template_len(max_depth) {
            return Err(Error::InvalidArgument(alloc::format!(
                "depth {max_depth} needs {} node slots, got {}",
                template_len(max_depth),
                nodes.len()
            )));
        }
        let tree = Self {
            max_depth,
            nodes,
            features,
        };
        let mut reachable = alloc::vec![false; tree.nodes.len()];
        let mut stack = alloc::vec![0usize];
        while let Some(p) = stack.pop() {
            reachable[p] = true;
            match &tree.nodes[p] {
                None => return Err(Error::InvalidArgument(alloc::format!("missing node {p}"))),
                Some(Node::Leaf(_)) => {}
                Some(Node::Split(rule)) => {
                    if 2 * p + 2 >= tree.nodes.len() {
                        return Err(Error::InvalidArgument(alloc::format!(
                            "split at bottom node {p}"
                        )));
                    }
                    if let SplitRule::Threshold { feature, .. } = rule {
                        if *feature >= tree.features.len() {
                            return Err(Error::InvalidArgument(alloc::format!(
                                "unknown feature {feature}"
                            )));
                        }
                    }
                    stack.push(2 * p + 1);
                    stack.push(2 * p + 2);
                }
            }
        }
        if let Some(p) = (0..tree.nodes.len()).find(|&p| !reachable[p] && tree.nodes[p].is_some()) {
            return Err(Error::InvalidArgument(alloc::format!(
                "unreachable node {p}"
            )));
        }
        Ok(tree)
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn nodes(&self) -> &[Option<Node>] {
        &self.nodes
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    /// Replaces the feature list that threshold splits index into.
    pub fn with_features(mut self, features: Vec<Feature>) -> Result<Self> {
        self.features = features;
        Self::new(self.max_depth, self.nodes, self.features)
    }

    pub fn node(&self, pos: usize) -> Option<&Node> {
        self.nodes.get(pos).and_then(Option::as_ref)
    }

    /// Positions of internal nodes, ascending.
    pub fn split_positions(&self) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&p| matches!(self.nodes[p], Some(Node::Split(_))))
            .collect()
    }

    /// Positions of leaves, ascending.
    pub fn leaf_positions(&self) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&p| matches!(self.nodes[p], Some(Node::Leaf(_))))
            .collect()
    }

    pub fn leaf_count(&self) -> usize {
        self.leaf_positions().len()
    }

    /// Depth of the deepest leaf.
    pub fn depth(&self) -> usize {
        self.leaf_positions()
            .into_iter()
            .map(|p| usize::BITS as usize - 1 - (p + 1).leading_zeros() as usize)
            .max()
            .unwrap_or(0)
    }

    /// Follows splits from the root using `goes_left` to decide each one.
    pub fn route(&self, mut goes_left: impl FnMut(&SplitRule) -> bool) -> usize {
        let mut p = 0;
        while let Some(Node::Split(rule)) = &self.nodes[p] {
            p = if goes_left(rule) {
                2 * p + 1
            } else {
                2 * p + 2
            };
        }
        p
    }

    pub fn goes_left(&self, rule: &SplitRule, row: &[f64]) -> bool {
        match rule {
            SplitRule::Threshold { feature, threshold } => {
                self.features[*feature].value(row) <= *threshold
            }
            SplitRule::Expression(g) => binary_output(g, row),
        }
    }

    pub fn leaf_of(&self, row: &[f64]) -> usize {
        self.route(|rule| self.goes_left(rule, row))
    }

    pub fn leaf(&self, pos: usize) -> Option<&Leaf> {
        match self.node(pos) {
            Some(Node::Leaf(l)) => Some(l),
            _ => None,
        }
    }

    pub fn predict_survival(&self, row: &[f64]) -> &StepFunction {
        match &self.nodes[self.leaf_of(row)] {
            Some(Node::Leaf(l)) => &l.survival,
            _ => unreachable!("route ends at a leaf"),
        }
    }

    /// Negated area under the predicted curve on `[0, horizon]`; larger means
    /// earlier expected events.
    pub fn risk_score(&self, row: &[f64], horizon: f64) -> f64 {
        -self.predict_survival(row).integral(0.0, horizon)
    }

    pub fn render(&self, format: TreeFormat, names: &[String]) -> String {
        match format {
            TreeFormat::Text => self.render_text(names),
            TreeFormat::Dot => self.render_dot(names),
        }
    }

    fn split_label(&self, rule: &SplitRule, names: &[String]) -> String {
        match rule {
            SplitRule::Threshold { feature, threshold } => alloc::format!(
                "({} <= {})",
                self.features[*feature].label(names),
                threshold
            ),
            SplitRule::Expression(g) => to_named_string(g, names),
        }
    }

    fn leaf_label(leaf: &Leaf) -> String {
        match leaf.survival.median() {
            Some(m) => alloc::format!("n={} median={}", leaf.size, m),
            None => alloc::format!("n={} median=none", leaf.size),
        }
    }

    fn render_text(&self, names: &[String]) -> String {
        let mut out = String::new();
        let mut stack = alloc::vec![(0usize, 0usize, "")];
        while let Some((p, indent, branch)) = stack.pop() {
            for _ in 0..indent {
                out.push_str("  ");
            }
            out.push_str(branch);
            match &self.nodes[p] {
                Some(Node::Split(rule)) => {
                    let _ = writeln!(out, "[{p}] {}", self.split_label(rule, names));
                    stack.push((2 * p + 2, indent + 1, "false: "));
                    stack.push((2 * p + 1, indent + 1, "true: "));
                }
                Some(Node::Leaf(leaf)) => {
                    let _ = writeln!(out, "[{p}] leaf {}", Self::leaf_label(leaf));
                }
                None => unreachable!("validated tree"),
            }
        }
        out
    }

    fn render_dot(&self, names: &[String]) -> String {
        let escape = |s: String| s.replace('\\', "\\\\").replace('"', "\\\"");
        let mut out = String::from("digraph survival_tree {\n  node [shape=box];\n");
        for (p, node) in self.nodes.iter().enumerate() {
            match node {
                Some(Node::Split(rule)) => {
                    let _ = writeln!(
                        out,
                        "  n{p} [label=\"{}\"];",
                        escape(self.split_label(rule, names))
                    );
                }
                Some(Node::Leaf(leaf)) => {
                    let _ = writeln!(
                        out,
                        "  n{p} [label=\"{}\", shape=ellipse];",
                        escape(Self::leaf_label(leaf))
                    );
                }
                None => {}
            }
        }
        for p in self.split_positions() {
            let _ = writeln!(out, "  n{p} -> n{} [label=\"true\"];", 2 * p + 1);
            let _ = writeln!(out, "  n{p} -> n{} [label=\"false\"];", 2 * p + 2);
        }
        out.push_str("}\n");
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeFormat {
    Text,
    Dot,
}

impl FromStr for TreeFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" | "txt" => Ok(TreeFormat::Text),
            "dot" => Ok(TreeFormat::Dot),
            other => Err(Error::UnsupportedFormat(other.to_string())),
        }
    }
}
