//! Built-in computational knowledge: ground simplification of numbers,
//! truth values, finite sets and tuples.

use std::collections::BTreeSet;

use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, Signed, Zero};
use serde::Serialize;

use super::ProverError;
use crate::formula::{alpha_equal, ops_names, Formula, RelOp};

pub const GROUPS: [&str; 4] = ["arithmetic", "logic", "sets", "tuples"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BuiltinInfo {
    pub id: &'static str,
    /// Groups are not disjoint.
    pub groups: &'static [&'static str],
}

const fn b(id: &'static str, groups: &'static [&'static str]) -> BuiltinInfo {
    BuiltinInfo { id, groups }
}

pub const BUILTINS: &[BuiltinInfo] = &[
    b("plus", &["arithmetic"]),
    b("minus", &["arithmetic"]),
    b("times", &["arithmetic"]),
    b("divide", &["arithmetic"]),
    b("power", &["arithmetic"]),
    b("compare", &["arithmetic"]),
    b("abs", &["arithmetic"]),
    b("equality", &["arithmetic", "logic", "sets", "tuples"]),
    b("not", &["logic"]),
    b("and", &["logic"]),
    b("or", &["logic"]),
    b("implies", &["logic"]),
    b("iff", &["logic"]),
    b("member", &["sets"]),
    b("cardinality", &["sets"]),
    b("union", &["sets"]),
    b("intersection", &["sets"]),
    b("length", &["tuples"]),
    b("index", &["tuples"]),
];

pub fn group_members(group: &str) -> Vec<&'static str> {
    BUILTINS
        .iter()
        .filter(|b| b.groups.contains(&group))
        .map(|b| b.id)
        .collect()
}

/// The set of active builtin members.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ActiveBuiltins(BTreeSet<&'static str>);

impl ActiveBuiltins {
    pub fn all() -> Self {
        ActiveBuiltins(BUILTINS.iter().map(|b| b.id).collect())
    }

    pub fn none() -> Self {
        Self::default()
    }

    pub fn has(&self, id: &str) -> bool {
        self.0.contains(id)
    }

    pub fn members(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.0.iter().copied()
    }
}

/// Resolves a selection of group ids and member ids.
pub fn resolve_builtins<S: AsRef<str>>(
    ids: impl IntoIterator<Item = S>,
) -> Result<ActiveBuiltins, ProverError> {
    let mut out = BTreeSet::new();
    for id in ids {
        let id = id.as_ref();
        if GROUPS.contains(&id) {
            out.extend(group_members(id));
        } else if let Some(m) = BUILTINS.iter().find(|b| b.id == id) {
            out.insert(m.id);
        } else {
            return Err(ProverError::UnknownBuiltin(id.to_string()));
        }
    }
    Ok(ActiveBuiltins(out))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SimplifyNote {
    DivisionByZero { term: String },
}

/// Normalizes `f` with the active builtins until nothing changes.
pub fn builtin_simplify(f: &Formula, active: &ActiveBuiltins) -> Formula {
    simplify_noted(f, active).0
}

pub fn simplify_noted(f: &Formula, active: &ActiveBuiltins) -> (Formula, Vec<SimplifyNote>) {
    let mut notes = Vec::new();
    if active.0.is_empty() {
        return (f.clone(), notes);
    }
    let mut cur = f.clone();
    for _ in 0..64 {
        let next = pass(&cur, active, &mut notes);
        if next == cur {
            break;
        }
        cur = next;
    }
    notes.dedup();
    (cur, notes)
}

fn pass(f: &Formula, on: &ActiveBuiltins, notes: &mut Vec<SimplifyNote>) -> Formula {
    let f = f.map_children(|c| pass(c, on, notes));
    step(f, on, notes)
}

type Num = Ratio<i64>;

fn num(f: &Formula) -> Option<Num> {
    match f {
        Formula::Int(n) => Some(Num::from_integer(*n)),
        Formula::Rational(n, d) if *d != 0 => Some(Num::new(*n, *d)),
        _ => None,
    }
}

fn from_num(r: Num) -> Formula {
    if *r.denom() == 1 {
        Formula::Int(*r.numer())
    } else {
        Formula::Rational(*r.numer(), *r.denom())
    }
}

fn truth(b: bool) -> Formula {
    if b {
        Formula::True
    } else {
        Formula::False
    }
}

/// Numbers, truth values and finite collections of those.
pub fn is_literal(f: &Formula) -> bool {
    match f {
        Formula::Int(_) | Formula::Rational(..) | Formula::True | Formula::False => true,
        Formula::Set(items) | Formula::Tuple(items) => items.iter().all(is_literal),
        _ => false,
    }
}

/// Value equality of two literals.
pub fn literal_eq(a: &Formula, b: &Formula) -> bool {
    match (a, b) {
        (Formula::Set(xs), Formula::Set(ys)) => {
            xs.iter().all(|x| ys.iter().any(|y| literal_eq(x, y)))
                && ys.iter().all(|y| xs.iter().any(|x| literal_eq(x, y)))
        }
        (Formula::Tuple(xs), Formula::Tuple(ys)) => {
            xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| literal_eq(x, y))
        }
        _ => match (num(a), num(b)) {
            (Some(x), Some(y)) => x == y,
            _ => a == b,
        },
    }
}

fn distinct_literals(items: &[Formula]) -> Vec<&Formula> {
    let mut out: Vec<&Formula> = Vec::new();
    for x in items {
        if !out.iter().any(|y| literal_eq(x, y)) {
            out.push(x);
        }
    }
    out
}

fn arith(
    op: &str,
    args: &[Formula],
    notes: &mut Vec<SimplifyNote>,
    whole: &Formula,
) -> Option<Formula> {
    let ns: Vec<Num> = args.iter().map(num).collect::<Option<_>>()?;
    let r = match (op, ns.as_slice()) {
        (ops_names::PLUS, [first, rest @ ..]) => {
            rest.iter().try_fold(*first, |acc, x| acc.checked_add(x))?
        }
        (ops_names::TIMES, [first, rest @ ..]) => {
            rest.iter().try_fold(*first, |acc, x| acc.checked_mul(x))?
        }
        (ops_names::MINUS, [x]) => Num::zero().checked_sub(x)?,
        (ops_names::MINUS, [x, y]) => x.checked_sub(y)?,
        (ops_names::DIVIDE, [x, y]) => {
            if y.is_zero() {
                notes.push(SimplifyNote::DivisionByZero {
                    term: whole.to_string(),
                });
                return None;
            }
            x.checked_div(y)?
        }
        (ops_names::POWER, [base, exp]) => {
            if !exp.is_integer() {
                return None;
            }
            let e = *exp.numer();
            if e.unsigned_abs() > 4096 {
                return None;
            }
            let mut acc = Num::from_integer(1);
            for _ in 0..e.unsigned_abs() {
                acc = acc.checked_mul(base)?;
            }
            if e < 0 {
                if acc.is_zero() {
                    notes.push(SimplifyNote::DivisionByZero {
                        term: whole.to_string(),
                    });
                    return None;
                }
                acc = Num::from_integer(1).checked_div(&acc)?;
            }
            acc
        }
        ("abs", [x]) => {
            if *x.numer() == i64::MIN {
                return None;
            }
            x.abs()
        }
        _ => return None,
    };
    Some(from_num(r))
}

fn builtin_for_op(op: &str) -> Option<&'static str> {
    Some(match op {
        ops_names::PLUS => "plus",
        ops_names::MINUS => "minus",
        ops_names::TIMES => "times",
        ops_names::DIVIDE => "divide",
        ops_names::POWER => "power",
        "abs" => "abs",
        "union" => "union",
        "intersection" => "intersection",
        _ => return None,
    })
}

fn literal_sets(args: &[Formula]) -> Option<Vec<&Vec<Formula>>> {
    args.iter()
        .map(|a| match a {
            Formula::Set(items) if items.iter().all(is_literal) => Some(items),
            _ => None,
        })
        .collect()
}

fn step(f: Formula, on: &ActiveBuiltins, notes: &mut Vec<SimplifyNote>) -> Formula {
    match &f {
        Formula::App(_, args) => {
            let Some(op) = f.head_name() else { return f };
            let Some(member) = builtin_for_op(op) else {
                return f;
            };
            if !on.has(member) {
                return f;
            }
            match member {
                "union" | "intersection" if args.len() >= 2 => {
                    let Some(sets) = literal_sets(args) else {
                        return f;
                    };
                    let items: Vec<Formula> = if member == "union" {
                        let all: Vec<Formula> =
                            sets.iter().flat_map(|s| s.iter().cloned()).collect();
                        distinct_literals(&all).into_iter().cloned().collect()
                    } else {
                        distinct_literals(sets[0])
                            .into_iter()
                            .filter(|x| {
                                sets[1..].iter().all(|s| s.iter().any(|y| literal_eq(x, y)))
                            })
                            .cloned()
                            .collect()
                    };
                    Formula::Set(items)
                }
                "union" | "intersection" => f,
                _ => arith(op, args, notes, &f).unwrap_or(f),
            }
        }
        Formula::Rel(op, a, b) => {
            let out = match op {
                RelOp::Lt | RelOp::Le | RelOp::Gt | RelOp::Ge if on.has("compare") => {
                    match (num(a), num(b)) {
                        (Some(x), Some(y)) => Some(truth(match op {
                            RelOp::Lt => x < y,
                            RelOp::Le => x <= y,
                            RelOp::Gt => x > y,
                            _ => x >= y,
                        })),
                        _ => None,
                    }
                }
                RelOp::Eq | RelOp::Neq if on.has("equality") => {
                    let same = if is_literal(a) && is_literal(b) {
                        Some(literal_eq(a, b))
                    } else if alpha_equal(a, b) {
                        Some(true)
                    } else {
                        None
                    };
                    same.map(|s| truth(if *op == RelOp::Eq { s } else { !s }))
                }
                RelOp::In if on.has("member") => match b.as_ref() {
                    Formula::Set(items) => {
                        if items.iter().any(|y| {
                            alpha_equal(a, y)
                                || (is_literal(a) && is_literal(y) && literal_eq(a, y))
                        }) {
                            Some(Formula::True)
                        } else if is_literal(a) && items.iter().all(is_literal) {
                            Some(Formula::False)
                        } else {
                            None
                        }
                    }
                    _ => None,
                },
                _ => None,
            };
            out.unwrap_or(f)
        }
        Formula::Not(x) if on.has("not") => match x.as_ref() {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            Formula::Not(y) => y.as_ref().clone(),
            _ => f,
        },
        Formula::And(items) if on.has("and") => {
            if items.contains(&Formula::False) {
                return Formula::False;
            }
            let kept: Vec<Formula> = items
                .iter()
                .filter(|x| **x != Formula::True)
                .cloned()
                .collect();
            Formula::and(kept)
        }
        Formula::Or(items) if on.has("or") => {
            if items.contains(&Formula::True) {
                return Formula::True;
            }
            let kept: Vec<Formula> = items
                .iter()
                .filter(|x| **x != Formula::False)
                .cloned()
                .collect();
            Formula::or(kept)
        }
        Formula::Implies(a, b) if on.has("implies") => match (a.as_ref(), b.as_ref()) {
            (Formula::True, _) => b.as_ref().clone(),
            (Formula::False, _) | (_, Formula::True) => Formula::True,
            (_, Formula::False) => Formula::not(a.as_ref().clone()),
            _ => f,
        },
        Formula::Iff(a, b) if on.has("iff") => match (a.as_ref(), b.as_ref()) {
            (Formula::True, x) | (x, Formula::True) => x.clone(),
            (Formula::False, x) | (x, Formula::False) => Formula::not(x.clone()),
            (x, y) if alpha_equal(x, y) => Formula::True,
            _ => f,
        },
        Formula::Length(x) => match x.as_ref() {
            Formula::Set(items) if on.has("cardinality") && items.iter().all(is_literal) => {
                Formula::Int(distinct_literals(items).len() as i64)
            }
            Formula::Tuple(items) if on.has("length") => Formula::Int(items.len() as i64),
            _ => f,
        },
        Formula::Index(base, idx) if on.has("index") => match (base.as_ref(), idx.as_ref()) {
            (Formula::Tuple(items), Formula::Int(k)) if *k >= 1 && (*k as usize) <= items.len() => {
                items[*k as usize - 1].clone()
            }
            _ => f,
        },
        _ => f,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;

    fn simp(s: &str, ids: &[&str]) -> Formula {
        builtin_simplify(&parse_formula(s).unwrap(), &resolve_builtins(ids).unwrap())
    }

    fn p(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    #[test]
    fn one_plus_one() {
        assert_eq!(simp("1+1", &["arithmetic"]), Formula::Int(2));
        assert_eq!(simp("1+1", &[]), p("1+1"));
        assert_eq!(simp("1+1", &["logic", "sets"]), p("1+1"));
    }

    #[test]
    fn cardinality_equation() {
        assert_eq!(
            simp("|{1,2,3}| = 3", &["sets", "arithmetic", "logic"]),
            Formula::True
        );
        assert_eq!(
            simp("|{1,2,2}| = 2", &["sets", "arithmetic"]),
            Formula::True
        );
    }

    #[test]
    fn members_and_groups() {
        assert_eq!(simp("2*3 + 1", &["times"]), p("6 + 1"));
        let all = resolve_builtins(GROUPS).unwrap();
        assert_eq!(all, ActiveBuiltins::all());
        let eq_groups = BUILTINS.iter().find(|b| b.id == "equality").unwrap().groups;
        assert!(eq_groups.len() > 1);
        assert!(resolve_builtins(["geometry"]).is_err());
    }

    #[test]
    fn rationals() {
        assert_eq!(simp("1/2 + 1/2", &["arithmetic"]), Formula::Int(1));
        assert_eq!(simp("1/3", &["arithmetic"]), Formula::Rational(1, 3));
        assert_eq!(simp("2^-2", &["arithmetic"]), Formula::Rational(1, 4));
        assert_eq!(simp("rat[1,2] < rat[2,3]", &["arithmetic"]), Formula::True);
    }

    #[test]
    fn division_by_zero_is_left_alone() {
        let (out, notes) =
            simplify_noted(&p("1/0 + 2*2"), &resolve_builtins(["arithmetic"]).unwrap());
        assert_eq!(out, p("1/0 + 4"));
        assert_eq!(notes.len(), 1);
    }

    #[test]
    fn overflow_is_left_alone() {
        let big = format!("{} + 1", i64::MAX);
        assert_eq!(simp(&big, &["arithmetic"]), p(&big));
    }

    #[test]
    fn logic_folding() {
        let on = &["logic"];
        assert_eq!(simp("not not a", on), p("a"));
        assert_eq!(simp("True and a and True", on), p("a"));
        assert_eq!(simp("a or False or b", on), p("a or b"));
        assert_eq!(simp("a => True", on), Formula::True);
        assert_eq!(simp("a => False", on), p("not a"));
        assert_eq!(simp("a <=> a", on), Formula::True);
        assert_eq!(simp("p[x] and False", on), Formula::False);
    }

    #[test]
    fn sets_and_tuples() {
        assert_eq!(simp("2 in {1,2,3}", &["sets"]), Formula::True);
        assert_eq!(simp("5 in {1,2,3}", &["sets"]), Formula::False);
        assert_eq!(simp("a in {1,a}", &["sets"]), Formula::True);
        assert_eq!(simp("a in {1,2}", &["sets"]), p("a in {1,2}"));
        assert_eq!(simp("union[{1,2},{2,3}]", &["sets"]), p("{1,2,3}"));
        assert_eq!(simp("intersection[{1,2},{2,3}]", &["sets"]), p("{2}"));
        assert_eq!(simp("|⟨a, b, c⟩|", &["tuples"]), Formula::Int(3));
        assert_eq!(simp("⟨a, b, c⟩_2", &["tuples"]), p("b"));
        assert_eq!(simp("⟨a, b⟩_3", &["tuples"]), p("⟨a, b⟩_3"));
        assert_eq!(simp("{1,2} = {2,1,1}", &["sets"]), Formula::True);
    }

    #[test]
    fn uninterpreted_symbols_untouched() {
        assert_eq!(simp("f[1+1] = g[2]", &["arithmetic"]), p("f[2] = g[2]"));
    }
}
