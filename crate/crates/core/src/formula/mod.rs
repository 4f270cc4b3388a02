//! The 1D formula language: tokens, abstract syntax, parser and printer,
//! plus the syntactic operations everything else is built on (free
//! variables, capture-avoiding substitution, alpha-equality, matching).

mod lexer;
mod ops;
mod parser;
mod printer;

use std::fmt;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

pub use lexer::{tokenize, LexError, Token, TokenKind};
pub use ops::{
    alpha_equal, constify_free, free_variables, fresh_name, match_pattern, names_in, substitute,
    Bindings,
};
pub use parser::{parse_declaration, parse_formula, ParseError};
pub use printer::{format, Style};

/// Relational operators. All are binary and non-associative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelOp {
    Eq,
    Neq,
    Le,
    Lt,
    Ge,
    Gt,
    In,
}

impl RelOp {
    pub fn ascii(self) -> &'static str {
        match self {
            RelOp::Eq => "=",
            RelOp::Neq => "!=",
            RelOp::Le => "<=",
            RelOp::Lt => "<",
            RelOp::Ge => ">=",
            RelOp::Gt => ">",
            RelOp::In => "in",
        }
    }

    pub fn unicode(self) -> &'static str {
        match self {
            RelOp::Eq => "=",
            RelOp::Neq => "≠",
            RelOp::Le => "≤",
            RelOp::Lt => "<",
            RelOp::Ge => "≥",
            RelOp::Gt => ">",
            RelOp::In => "∈",
        }
    }
}

/// An inclusive integer range attached to a single-variable binder,
/// as in `forall[j = 1..|b|, ...]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Range {
    pub lo: Formula,
    pub hi: Formula,
}

/// The variable part of a quantifier.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Binder {
    pub vars: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition: Option<Formula>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<Box<Range>>,
}

impl Binder {
    pub fn var(name: impl Into<String>) -> Self {
        Binder {
            vars: vec![name.into()],
            condition: None,
            range: None,
        }
    }

    pub fn vars<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Binder {
            vars: names.into_iter().map(Into::into).collect(),
            condition: None,
            range: None,
        }
    }

    pub fn with_condition(mut self, condition: Formula) -> Self {
        self.condition = Some(condition);
        self
    }

    pub fn with_range(mut self, lo: Formula, hi: Formula) -> Self {
        self.range = Some(Box::new(Range { lo, hi }));
        self
    }

    pub fn binds(&self, name: &str) -> bool {
        self.vars.iter().any(|v| v == name)
    }
}

/// Abstract syntax of formulas and terms. Terms and formulas share one
/// type; `App` with a `Const` head covers both function and predicate
/// application.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "t", content = "c")]
pub enum Formula {
    True,
    False,
    Const(String),
    Var(String),
    Int(i64),
    /// Always normalized: `gcd(num, den) == 1`, `den > 1`.
    Rational(i64, i64),
    App(Box<Formula>, Vec<Formula>),
    Index(Box<Formula>, Box<Formula>),
    Set(Vec<Formula>),
    Tuple(Vec<Formula>),
    Length(Box<Formula>),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    DefIff(Box<Formula>, Box<Formula>),
    DefEq(Box<Formula>, Box<Formula>),
    Rel(RelOp, Box<Formula>, Box<Formula>),
    Forall(Box<Binder>, Box<Formula>),
    Exists(Box<Binder>, Box<Formula>),
}

/// Function symbols the parser produces for infix arithmetic.
pub mod ops_names {
    pub const PLUS: &str = "plus";
    pub const MINUS: &str = "minus";
    pub const TIMES: &str = "times";
    pub const DIVIDE: &str = "divide";
    pub const POWER: &str = "power";
}

impl Formula {
    pub fn var(name: impl Into<String>) -> Self {
        Formula::Var(name.into())
    }

    pub fn constant(name: impl Into<String>) -> Self {
        Formula::Const(name.into())
    }

    /// `head[args]` with a constant head.
    pub fn app(head: impl Into<String>, args: Vec<Formula>) -> Self {
        Formula::App(Box::new(Formula::Const(head.into())), args)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn implies(lhs: Formula, rhs: Formula) -> Self {
        Formula::Implies(Box::new(lhs), Box::new(rhs))
    }

    pub fn iff(lhs: Formula, rhs: Formula) -> Self {
        Formula::Iff(Box::new(lhs), Box::new(rhs))
    }

    pub fn def_iff(lhs: Formula, rhs: Formula) -> Self {
        Formula::DefIff(Box::new(lhs), Box::new(rhs))
    }

    pub fn def_eq(lhs: Formula, rhs: Formula) -> Self {
        Formula::DefEq(Box::new(lhs), Box::new(rhs))
    }

    pub fn rel(op: RelOp, lhs: Formula, rhs: Formula) -> Self {
        Formula::Rel(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn index(base: Formula, index: Formula) -> Self {
        Formula::Index(Box::new(base), Box::new(index))
    }

    pub fn length(arg: Formula) -> Self {
        Formula::Length(Box::new(arg))
    }

    pub fn forall(binder: Binder, body: Formula) -> Self {
        Formula::Forall(Box::new(binder), Box::new(body))
    }

    pub fn exists(binder: Binder, body: Formula) -> Self {
        Formula::Exists(Box::new(binder), Box::new(body))
    }

    /// Conjunction that keeps the flattening invariant: nested `And`s are
    /// spliced, a single conjunct is returned as is, none gives `True`.
    pub fn and(items: Vec<Formula>) -> Self {
        let mut flat = Vec::with_capacity(items.len());
        for item in items {
            match item {
                Formula::And(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => Formula::True,
            1 => flat.pop().unwrap(),
            _ => Formula::And(flat),
        }
    }

    /// Disjunction, flattened like [`Formula::and`]; none gives `False`.
    pub fn or(items: Vec<Formula>) -> Self {
        let mut flat = Vec::with_capacity(items.len());
        for item in items {
            match item {
                Formula::Or(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => Formula::False,
            1 => flat.pop().unwrap(),
            _ => Formula::Or(flat),
        }
    }

    /// Normalized rational literal; integral values collapse to `Int`.
    /// Returns `None` for a zero denominator or on overflow.
    pub fn rational(num: i64, den: i64) -> Option<Self> {
        if den == 0 {
            return None;
        }
        let g = num.gcd(&den);
        let (mut n, mut d) = (num / g, den / g);
        if d < 0 {
            n = n.checked_neg()?;
            d = d.checked_neg()?;
        }
        Some(if d == 1 {
            Formula::Int(n)
        } else {
            Formula::Rational(n, d)
        })
    }

    pub fn is_numeral(&self) -> bool {
        matches!(self, Formula::Int(_) | Formula::Rational(..))
    }

    /// Name of the head symbol when this is `c[...]` with a constant head.
    pub fn head_name(&self) -> Option<&str> {
        match self {
            Formula::App(head, _) => match head.as_ref() {
                Formula::Const(name) => Some(name),
                _ => None,
            },
            _ => None,
        }
    }

    /// Immediate subformulas, left to right. Binder parts come first,
    /// in the order condition, range bounds.
    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::True
            | Formula::False
            | Formula::Const(_)
            | Formula::Var(_)
            | Formula::Int(_)
            | Formula::Rational(..) => Vec::new(),
            Formula::App(head, args) => {
                let mut out = vec![head.as_ref()];
                out.extend(args.iter());
                out
            }
            Formula::Index(a, b)
            | Formula::Implies(a, b)
            | Formula::Iff(a, b)
            | Formula::DefIff(a, b)
            | Formula::DefEq(a, b)
            | Formula::Rel(_, a, b) => vec![a.as_ref(), b.as_ref()],
            Formula::Set(items)
            | Formula::Tuple(items)
            | Formula::And(items)
            | Formula::Or(items) => items.iter().collect(),
            Formula::Length(a) | Formula::Not(a) => vec![a.as_ref()],
            Formula::Forall(binder, body) | Formula::Exists(binder, body) => {
                let mut out = Vec::new();
                if let Some(c) = &binder.condition {
                    out.push(c);
                }
                if let Some(r) = &binder.range {
                    out.push(&r.lo);
                    out.push(&r.hi);
                }
                out.push(body.as_ref());
                out
            }
        }
    }

    /// Rebuilds the node with each immediate subformula replaced by `f` of
    /// it, visiting them in [`Formula::children`] order.
    pub fn map_children(&self, mut f: impl FnMut(&Formula) -> Formula) -> Formula {
        let map_binder = |b: &Binder, f: &mut dyn FnMut(&Formula) -> Formula| Binder {
            vars: b.vars.clone(),
            condition: b.condition.as_ref().map(&mut *f),
            range: b.range.as_ref().map(|r| {
                Box::new(Range {
                    lo: f(&r.lo),
                    hi: f(&r.hi),
                })
            }),
        };
        match self {
            Formula::True
            | Formula::False
            | Formula::Const(_)
            | Formula::Var(_)
            | Formula::Int(_)
            | Formula::Rational(..) => self.clone(),
            Formula::App(head, args) => {
                let head = f(head);
                Formula::App(Box::new(head), args.iter().map(&mut f).collect())
            }
            Formula::Index(a, b) => {
                let a = f(a);
                Formula::Index(Box::new(a), Box::new(f(b)))
            }
            Formula::Implies(a, b) => {
                let a = f(a);
                Formula::Implies(Box::new(a), Box::new(f(b)))
            }
            Formula::Iff(a, b) => {
                let a = f(a);
                Formula::Iff(Box::new(a), Box::new(f(b)))
            }
            Formula::DefIff(a, b) => {
                let a = f(a);
                Formula::DefIff(Box::new(a), Box::new(f(b)))
            }
            Formula::DefEq(a, b) => {
                let a = f(a);
                Formula::DefEq(Box::new(a), Box::new(f(b)))
            }
            Formula::Rel(op, a, b) => {
                let a = f(a);
                Formula::Rel(*op, Box::new(a), Box::new(f(b)))
            }
            Formula::Set(items) => Formula::Set(items.iter().map(&mut f).collect()),
            Formula::Tuple(items) => Formula::Tuple(items.iter().map(&mut f).collect()),
            Formula::And(items) => Formula::And(items.iter().map(&mut f).collect()),
            Formula::Or(items) => Formula::Or(items.iter().map(&mut f).collect()),
            Formula::Length(a) => Formula::Length(Box::new(f(a))),
            Formula::Not(a) => Formula::Not(Box::new(f(a))),
            Formula::Forall(binder, body) => {
                let binder = map_binder(binder, &mut f);
                Formula::Forall(Box::new(binder), Box::new(f(body)))
            }
            Formula::Exists(binder, body) => {
                let binder = map_binder(binder, &mut f);
                Formula::Exists(Box::new(binder), Box::new(f(body)))
            }
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        1 + self
            .children()
            .into_iter()
            .map(Formula::size)
            .sum::<usize>()
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format(self, Style::Unicode))
    }
}

/// A global declaration as written in a declaration cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Declaration {
    /// An orphaned universal quantifier: binder without body.
    Quantifier { binder: Binder },
    /// An orphaned implication `lhs =>` without right-hand side.
    Implication { lhs: Formula },
    /// `let name = replacement`.
    Let { name: String, replacement: Formula },
    /// Several of the above written in one cell, in written order.
    Sequence { items: Vec<Declaration> },
}

impl Declaration {
    /// The flat list of non-sequence items, in written order.
    pub fn items(&self) -> Vec<&Declaration> {
        match self {
            Declaration::Sequence { items } => items.iter().collect(),
            other => vec![other],
        }
    }
}

impl fmt::Display for Declaration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&printer::format_declaration(self, Style::Unicode))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_normalizes() {
        assert_eq!(Formula::rational(6, 4), Some(Formula::Rational(3, 2)));
        assert_eq!(Formula::rational(3, -6), Some(Formula::Rational(-1, 2)));
        assert_eq!(Formula::rational(8, 4), Some(Formula::Int(2)));
        assert_eq!(Formula::rational(1, 0), None);
    }

    #[test]
    fn and_flattens() {
        let a = Formula::var("a");
        let b = Formula::var("b");
        let c = Formula::var("c");
        let nested = Formula::and(vec![Formula::And(vec![a.clone(), b.clone()]), c.clone()]);
        assert_eq!(nested, Formula::And(vec![a.clone(), b, c]));
        assert_eq!(Formula::and(vec![a.clone()]), a);
        assert_eq!(Formula::and(vec![]), Formula::True);
    }
}
