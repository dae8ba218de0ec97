//! Fixed-template GP expressions.
//!
//! A [`Genotype`] is a complete binary tree of depth `h` stored in heap
//! layout (children of `i` at `2i + 1` and `2i + 2`). Every position holds a
//! symbol, active or not; leaf positions always hold terminals. Values are
//! untyped reals: booleans are `{0, 1}` and a number is truthy when `> 0`.

use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::rng::CounterRng;

mod eval;
mod text;

pub use eval::{
    active_positions, active_size, binary_output, evaluate, evaluate_columns, truthy,
    PROTECTED_DIV_EPS,
};
pub use text::{parse_expression, to_expression_string, to_named_string};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Operator {
    Add,
    Sub,
    Mul,
    Div,
    Square,
    Le,
    Not,
    And,
    Or,
}

impl Operator {
    pub const ALL: [Operator; 9] = [
        Operator::Add,
        Operator::Sub,
        Operator::Mul,
        Operator::Div,
        Operator::Square,
        Operator::Le,
        Operator::Not,
        Operator::And,
        Operator::Or,
    ];

    pub fn arity(self) -> usize {
        match self {
            Operator::Square | Operator::Not => 1,
            _ => 2,
        }
    }

    pub fn is_commutative(self) -> bool {
        matches!(
            self,
            Operator::Add | Operator::Mul | Operator::And | Operator::Or
        )
    }

    pub fn token(self) -> &'static str {
        match self {
            Operator::Add => "+",
            Operator::Sub => "-",
            Operator::Mul => "*",
            Operator::Div => "/",
            Operator::Square => "^2",
            Operator::Le => "<=",
            Operator::Not => "NOT",
            Operator::And => "AND",
            Operator::Or => "OR",
        }
    }

    pub fn from_token(token: &str) -> Option<Self> {
        Operator::ALL.into_iter().find(|op| op.token() == token)
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Non-empty, ordered, duplicate-free set of operators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OperatorSet(Vec<Operator>);

impl OperatorSet {
    pub fn new(ops: &[Operator]) -> Result<Self> {
        let mut v = ops.to_vec();
        v.sort_unstable();
        v.dedup();
        if v.is_empty() {
            return Err(Error::Config(alloc::string::String::from(
                "operator set is empty",
            )));
        }
        Ok(Self(v))
    }

    /// `+ - * ^2 /`
    pub fn numeric() -> Self {
        Self(alloc::vec![
            Operator::Add,
            Operator::Sub,
            Operator::Mul,
            Operator::Div,
            Operator::Square
        ])
    }

    /// `+ - * ^2 / <= NOT AND OR`
    pub fn full() -> Self {
        Self(Operator::ALL.to_vec())
    }

    /// `+ * ^2 <=`, the reduced set for the XOR problem.
    pub fn xor_engineered() -> Self {
        Self(alloc::vec![
            Operator::Add,
            Operator::Mul,
            Operator::Square,
            Operator::Le
        ])
    }

    /// Parses a comma-separated token list such as `"+,*,^2,<="`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut ops = Vec::new();
        for tok in text.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            ops.push(
                Operator::from_token(tok)
                    .ok_or_else(|| Error::Config(alloc::format!("unknown operator `{tok}`")))?,
            );
        }
        Self::new(&ops)
    }

    pub fn ops(&self) -> &[Operator] {
        &self.0
    }

    pub fn contains(&self, op: Operator) -> bool {
        self.0.contains(&op)
    }

    /// Whether the set can turn numbers into booleans (contains `<=`).
    pub fn is_binary_capable(&self) -> bool {
        self.contains(Operator::Le)
    }
}

impl fmt::Display for OperatorSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, op) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str(op.token())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Symbol {
    Op(Operator),
    Var(u32),
    Const(f64),
}

impl Symbol {
    pub fn is_terminal(&self) -> bool {
        !matches!(self, Symbol::Op(_))
    }

    /// Exact identity key (constants by bit pattern).
    pub fn key(&self) -> u64 {
        match *self {
            Symbol::Op(op) => op as u64,
            Symbol::Var(i) => (1 << 62) | u64::from(i),
            Symbol::Const(c) => crate::rng::mix64(c.to_bits()) | (1 << 63),
        }
    }

    pub fn same(&self, other: &Symbol) -> bool {
        match (self, other) {
            (Symbol::Const(a), Symbol::Const(b)) => a.to_bits() == b.to_bits(),
            _ => self == other,
        }
    }
}

pub fn template_len(depth: usize) -> usize {
    (1usize << (depth + 1)) - 1
}

#[derive(Debug, Clone, PartialEq)]
pub struct Genotype {
    depth: usize,
    symbols: Vec<Symbol>,
}

impl Genotype {
    pub fn new(depth: usize, symbols: Vec<Symbol>) -> Result<Self> {
        if symbols.len() != template_len(depth) {
            return Err(Error::InvalidArgument(alloc::format!(
                "depth {depth} template needs {} symbols, got {}",
                template_len(depth),
                symbols.len()
            )));
        }
        let g = Self { depth, symbols };
        for (i, s) in g.symbols.iter().enumerate() {
            if g.is_leaf_position(i) && !s.is_terminal() {
                return Err(Error::InvalidArgument(alloc::format!(
                    "operator at leaf position {i}"
                )));
            }
            if let Symbol::Const(c) = s {
                if !c.is_finite() {
                    return Err(Error::InvalidArgument(alloc::format!(
                        "non-finite constant at {i}"
                    )));
                }
            }
        }
        Ok(g)
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn is_leaf_position(&self, i: usize) -> bool {
        i >= (1usize << self.depth) - 1
    }

    pub fn root(&self) -> Symbol {
        self.symbols[0]
    }

    /// Copies `donor`'s symbols at `positions`; both templates must match.
    pub fn copy_from(&mut self, donor: &Genotype, positions: &[usize]) {
        debug_assert_eq!(self.depth, donor.depth);
        for &p in positions {
            self.symbols[p] = donor.symbols[p];
        }
    }

    /// Largest covariate index referenced anywhere in the template.
    pub fn max_var(&self) -> Option<u32> {
        self.symbols
            .iter()
            .filter_map(|s| match s {
                Symbol::Var(i) => Some(*i),
                _ => None,
            })
            .max()
    }
}

/// `K` genotypes evolved together as one individual.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiGenotype {
    pub trees: Vec<Genotype>,
    pub binary_output: bool,
}

impl MultiGenotype {
    pub fn new(trees: Vec<Genotype>, binary_output: bool) -> Self {
        Self {
            trees,
            binary_output,
        }
    }

    pub fn k(&self) -> usize {
        self.trees.len()
    }
}

/// Pooled empirical quantiles (0%, 1%, ..., 100%) of every covariate.
pub fn constant_pool(columns: &[Vec<f64>]) -> Vec<f64> {
    let mut pool = Vec::with_capacity(columns.len() * 101);
    for col in columns {
        if col.is_empty() {
            continue;
        }
        let mut sorted = col.clone();
        sorted.sort_by(f64::total_cmp);
        for q in 0..=100 {
            pool.push(crate::metrics::percentile(&sorted, q as f64 / 100.0));
        }
    }
    pool.sort_by(f64::total_cmp);
    pool.dedup();
    pool
}

fn random_terminal(n_vars: usize, pool: &[f64], rng: &mut CounterRng) -> Symbol {
    if pool.is_empty() || rng.bernoulli(0.5) {
        Symbol::Var(rng.below(n_vars) as u32)
    } else {
        Symbol::Const(*rng.choose(pool))
    }
}

/// Ramped half-and-half over the template: a target depth is drawn from
/// `1..=depth`, then either every position above it holds an operator (full)
/// or each picks uniformly among the operators and the two terminal kinds
/// (grow). Positions below the target depth hold random terminals.
pub fn random_genotype(
    depth: usize,
    ops: &OperatorSet,
    n_vars: usize,
    pool: &[f64],
    rng: &mut CounterRng,
) -> Genotype {
    assert!(depth >= 1 && n_vars >= 1);
    let len = template_len(depth);
    let target = 1 + rng.below(depth);
    let full = rng.bernoulli(0.5);
    let mut symbols = Vec::with_capacity(len);
    for i in 0..len {
        let level = usize::BITS as usize - 1 - (i + 1).leading_zeros() as usize;
        let s = if level >= target {
            random_terminal(n_vars, pool, rng)
        } else if full {
            Symbol::Op(*rng.choose(ops.ops()))
        } else {
            let r = rng.below(ops.ops().len() + 2);
            if r < ops.ops().len() {
                Symbol::Op(ops.ops()[r])
            } else if r == ops.ops().len() || pool.is_empty() {
                Symbol::Var(rng.below(n_vars) as u32)
            } else {
                Symbol::Const(*rng.choose(pool))
            }
        };
        symbols.push(s);
    }
    Genotype { depth, symbols }
}
