//! Canonical infix strings and their parser.
//!
//! Grammar: `x3`, covariate names, numbers, `(a op b)` for binary operators,
//! `(a^2)` and `(NOT a)`. Operands of commutative operators are printed in
//! lexicographic order, so commuted trees print the same string.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{template_len, Genotype, Operator, Symbol};
use crate::error::{Error, Result};

fn format_const(c: f64) -> String {
    let s = format!("{c}");
    if s.len() > 12 {
        format!("{c:e}")
    } else {
        s
    }
}

fn render(g: &Genotype, pos: usize, var: &dyn Fn(u32) -> String) -> String {
    match g.symbols()[pos] {
        Symbol::Var(i) => var(i),
        Symbol::Const(c) => format_const(c),
        Symbol::Op(Operator::Square) => format!("({}^2)", render(g, 2 * pos + 1, var)),
        Symbol::Op(Operator::Not) => format!("(NOT {})", render(g, 2 * pos + 1, var)),
        Symbol::Op(op) => {
            let mut a = render(g, 2 * pos + 1, var);
            let mut b = render(g, 2 * pos + 2, var);
            if op.is_commutative() && b < a {
                core::mem::swap(&mut a, &mut b);
            }
            format!("({a} {} {b})", op.token())
        }
    }
}

/// Canonical string over the active subtree, covariates as `x<i>`.
pub fn to_expression_string(g: &Genotype) -> String {
    render(g, 0, &|i| format!("x{i}"))
}

/// Like [`to_expression_string`] with covariate names substituted; falls
/// back to `x<i>` for indices without a name.
pub fn to_named_string(g: &Genotype, names: &[String]) -> String {
    render(g, 0, &|i| {
        names
            .get(i as usize)
            .cloned()
            .unwrap_or_else(|| format!("x{i}"))
    })
}

enum Ast {
    Leaf(Symbol),
    Unary(Operator, Box<Ast>),
    Binary(Operator, Box<Ast>, Box<Ast>),
}

impl Ast {
    fn depth(&self) -> usize {
        match self {
            Ast::Leaf(_) => 0,
            Ast::Unary(_, a) => 1 + a.depth(),
            Ast::Binary(_, a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    fn place(&self, pos: usize, out: &mut [Symbol]) {
        match self {
            Ast::Leaf(s) => out[pos] = *s,
            Ast::Unary(op, a) => {
                out[pos] = Symbol::Op(*op);
                a.place(2 * pos + 1, out);
            }
            Ast::Binary(op, a, b) => {
                out[pos] = Symbol::Op(*op);
                a.place(2 * pos + 1, out);
                b.place(2 * pos + 2, out);
            }
        }
    }
}

fn tokenize(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c == b'(' || c == b')' {
            out.push(&text[i..i + 1]);
            i += 1;
        } else if c == b'^' {
            let end = (i + 2).min(bytes.len());
            out.push(&text[i..end]);
            i = end;
        } else {
            let start = i;
            while i < bytes.len()
                && !bytes[i].is_ascii_whitespace()
                && !matches!(bytes[i], b'(' | b')' | b'^')
            {
                i += 1;
            }
            out.push(&text[start..i]);
        }
    }
    out
}

struct Parser<'a> {
    tokens: Vec<&'a str>,
    at: usize,
    names: &'a [String],
}

impl<'a> Parser<'a> {
    fn next(&mut self) -> Result<&'a str> {
        let t = self
            .tokens
            .get(self.at)
            .copied()
            .ok_or_else(|| Error::Parse(String::from("unexpected end of expression")))?;
        self.at += 1;
        Ok(t)
    }

    fn expect(&mut self, want: &str) -> Result<()> {
        let t = self.next()?;
        if t != want {
            return Err(Error::Parse(format!("expected `{want}`, found `{t}`")));
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Ast> {
        let t = self.next()?;
        if t != "(" {
            return self.atom(t).map(Ast::Leaf);
        }
        if self.tokens.get(self.at) == Some(&"NOT") {
            self.at += 1;
            let a = self.expr()?;
            self.expect(")")?;
            return Ok(Ast::Unary(Operator::Not, Box::new(a)));
        }
        let a = self.expr()?;
        let op_tok = self.next()?;
        let op = Operator::from_token(op_tok)
            .ok_or_else(|| Error::Parse(format!("unknown operator `{op_tok}`")))?;
        let node = match op {
            Operator::Square => Ast::Unary(op, Box::new(a)),
            Operator::Not => return Err(Error::Parse(String::from("NOT is a prefix operator"))),
            _ => Ast::Binary(op, Box::new(a), Box::new(self.expr()?)),
        };
        self.expect(")")?;
        Ok(node)
    }

    fn atom(&self, t: &str) -> Result<Symbol> {
        if let Some(i) = self.names.iter().position(|n| n == t) {
            return Ok(Symbol::Var(i as u32));
        }
        if let Some(digits) = t.strip_prefix('x') {
            if let Ok(i) = digits.parse::<u32>() {
                if !self.names.is_empty() && i as usize >= self.names.len() {
                    return Err(Error::Parse(format!("covariate `{t}` out of range")));
                }
                return Ok(Symbol::Var(i));
            }
        }
        match t.parse::<f64>() {
            Ok(c) if c.is_finite() => Ok(Symbol::Const(c)),
            _ => Err(Error::Parse(format!("unrecognised token `{t}`"))),
        }
    }
}

/// Parses a canonical string into a depth-`depth` template. Positions outside
/// the expression are filled with the constant 0. `names` resolves named
/// covariates and bounds `x<i>` indices when non-empty.
pub fn parse_expression(text: &str, depth: usize, names: &[String]) -> Result<Genotype> {
    let mut p = Parser {
        tokens: tokenize(text),
        at: 0,
        names,
    };
    let ast = p.expr()?;
    if p.at != p.tokens.len() {
        return Err(Error::Parse(format!(
            "trailing input after position {}",
            p.at
        )));
    }
    if ast.depth() > depth {
        return Err(Error::Parse(format!(
            "expression depth {} exceeds template depth {depth}",
            ast.depth()
        )));
    }
    let mut symbols = alloc::vec![Symbol::Const(0.0); template_len(depth)];
    ast.place(0, &mut symbols);
    Genotype::new(depth, symbols).map_err(|e| Error::Parse(e.to_string()))
}
