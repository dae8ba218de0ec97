use alloc::vec;
use alloc::vec::Vec;

use super::{Genotype, Operator, Symbol};

/// Divisors with magnitude at or below this make `/` return its numerator.
pub const PROTECTED_DIV_EPS: f64 = 1e-6;

#[inline]
pub fn truthy(v: f64) -> bool {
    v > 0.0
}

#[inline]
fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

#[inline]
fn saturate(v: f64) -> f64 {
    v.clamp(-f64::MAX, f64::MAX)
}

#[inline]
fn apply(op: Operator, a: f64, b: f64) -> f64 {
    match op {
        Operator::Add => saturate(a + b),
        Operator::Sub => saturate(a - b),
        Operator::Mul => saturate(a * b),
        Operator::Div => {
            if b.abs() <= PROTECTED_DIV_EPS {
                a
            } else {
                saturate(a / b)
            }
        }
        Operator::Square => saturate(a * a),
        Operator::Le => flag(a <= b),
        Operator::Not => flag(!truthy(a)),
        Operator::And => flag(truthy(a) && truthy(b)),
        Operator::Or => flag(truthy(a) || truthy(b)),
    }
}

fn eval_at(g: &Genotype, pos: usize, row: &[f64]) -> f64 {
    match g.symbols[pos] {
        Symbol::Var(i) => row[i as usize],
        Symbol::Const(c) => c,
        Symbol::Op(op) => {
            let a = eval_at(g, 2 * pos + 1, row);
            let b = if op.arity() == 2 {
                eval_at(g, 2 * pos + 2, row)
            } else {
                0.0
            };
            apply(op, a, b)
        }
    }
}

/// Value of the expression rooted at position 0 on one covariate row.
pub fn evaluate(g: &Genotype, row: &[f64]) -> f64 {
    eval_at(g, 0, row)
}

/// Truthiness of the root value.
pub fn binary_output(g: &Genotype, row: &[f64]) -> bool {
    truthy(evaluate(g, row))
}

fn eval_column_at(g: &Genotype, pos: usize, columns: &[Vec<f64>], n: usize) -> Vec<f64> {
    match g.symbols[pos] {
        Symbol::Var(i) => columns[i as usize].clone(),
        Symbol::Const(c) => vec![c; n],
        Symbol::Op(op) => {
            let mut a = eval_column_at(g, 2 * pos + 1, columns, n);
            if op.arity() == 2 {
                let b = eval_column_at(g, 2 * pos + 2, columns, n);
                for (x, y) in a.iter_mut().zip(b) {
                    *x = apply(op, *x, y);
                }
            } else {
                for x in a.iter_mut() {
                    *x = apply(op, *x, 0.0);
                }
            }
            a
        }
    }
}

/// Evaluates the expression on every patient of a column-major covariate
/// matrix (`columns[j][i]` is covariate `j` of patient `i`).
pub fn evaluate_columns(g: &Genotype, columns: &[Vec<f64>], n: usize) -> Vec<f64> {
    eval_column_at(g, 0, columns, n)
}

/// Positions reachable from the root, in pre-order.
pub fn active_positions(g: &Genotype) -> Vec<usize> {
    let mut out = Vec::new();
    let mut stack = vec![0usize];
    while let Some(p) = stack.pop() {
        out.push(p);
        if let Symbol::Op(op) = g.symbols[p] {
            if op.arity() == 2 {
                stack.push(2 * p + 2);
            }
            stack.push(2 * p + 1);
        }
    }
    out
}

pub fn active_size(g: &Genotype) -> usize {
    active_positions(g).len()
}
