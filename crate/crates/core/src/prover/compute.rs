//! The compute activity: rewriting with knowledge-base equations followed
//! by built-in simplification, up to a fixpoint.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use super::builtins::{simplify_noted, ActiveBuiltins, SimplifyNote};
use crate::formula::{constify_free, match_pattern, substitute, Bindings, Formula};
use crate::session::{FormulaEntry, FormulaKey};

pub const DEFAULT_MAX_STEPS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TraceStep {
    Rewrite {
        label: String,
        key: FormulaKey,
        /// Child indices from the root, in `Formula::children` order.
        position: Vec<usize>,
        result: String,
    },
    Builtin {
        result: String,
        #[serde(skip_serializing_if = "Vec::is_empty")]
        notes: Vec<SimplifyNote>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComputeResult {
    pub result: Formula,
    pub trace: Vec<TraceStep>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ComputeError {
    #[error("no fixpoint within {limit} steps")]
    StepLimitExceeded {
        limit: usize,
        partial: ComputeResult,
    },
}

struct RewriteRule<'a> {
    vars: BTreeSet<String>,
    conditions: Vec<Formula>,
    lhs: Formula,
    rhs: Formula,
    entry: &'a FormulaEntry,
}

/// Equations, definitions and equivalences under a universal prefix,
/// oriented left to right.
fn rewrite_rules(knowledge: &[FormulaEntry]) -> Vec<RewriteRule<'_>> {
    let mut out = Vec::new();
    for entry in knowledge {
        let mut f = constify_free(&entry.formula);
        let mut vars = BTreeSet::new();
        let mut conditions = Vec::new();
        while let Formula::Forall(b, body) = &f {
            if b.range.is_some() {
                break;
            }
            vars.extend(b.vars.iter().cloned());
            conditions.extend(b.condition.clone());
            let inner = (**body).clone();
            f = inner;
        }
        match f {
            Formula::Rel(crate::formula::RelOp::Eq, l, r)
            | Formula::DefEq(l, r)
            | Formula::DefIff(l, r)
            | Formula::Iff(l, r) => out.push(RewriteRule {
                vars,
                conditions,
                lhs: *l,
                rhs: *r,
                entry,
            }),
            _ => {}
        }
    }
    out
}

fn try_rules(
    f: &Formula,
    rules: &[RewriteRule],
    builtins: &ActiveBuiltins,
) -> Option<(usize, Formula)> {
    for (i, r) in rules.iter().enumerate() {
        let mut b = Bindings::new();
        if !match_pattern(&r.lhs, f, &r.vars, &mut b) || !r.vars.iter().all(|v| b.contains_key(v)) {
            continue;
        }
        let ok = r.conditions.iter().all(|c| {
            super::builtins::builtin_simplify(&substitute(c, &b), builtins) == Formula::True
        });
        if ok {
            return Some((i, substitute(&r.rhs, &b)));
        }
    }
    None
}

/// Leftmost-outermost single rewrite step.
fn rewrite_once(
    f: &Formula,
    rules: &[RewriteRule],
    builtins: &ActiveBuiltins,
    path: &mut Vec<usize>,
) -> Option<(usize, Formula)> {
    if let Some(hit) = try_rules(f, rules, builtins) {
        return Some(hit);
    }
    let children = f.children();
    for (i, c) in children.iter().enumerate() {
        path.push(i);
        if let Some((rule, replaced)) = rewrite_once(c, rules, builtins, path) {
            let mut k = 0;
            let rebuilt = f.map_children(|x| {
                let out = if k == i { replaced.clone() } else { x.clone() };
                k += 1;
                out
            });
            return Some((rule, rebuilt));
        }
        path.pop();
    }
    None
}

pub fn compute(
    expr: &Formula,
    knowledge: &[FormulaEntry],
    builtins: &ActiveBuiltins,
    max_steps: usize,
) -> Result<ComputeResult, ComputeError> {
    let rules = rewrite_rules(knowledge);
    let mut cur = constify_free(expr);
    let mut trace = Vec::new();
    loop {
        let mut path = Vec::new();
        let next = if let Some((i, next)) = rewrite_once(&cur, &rules, builtins, &mut path) {
            trace.push(TraceStep::Rewrite {
                label: rules[i].entry.label.clone(),
                key: rules[i].entry.key.clone(),
                position: path,
                result: next.to_string(),
            });
            next
        } else {
            let (next, notes) = simplify_noted(&cur, builtins);
            if next == cur {
                return Ok(ComputeResult { result: cur, trace });
            }
            trace.push(TraceStep::Builtin {
                result: next.to_string(),
                notes,
            });
            next
        };
        cur = next;
        if trace.len() >= max_steps {
            // One more look: a fixpoint reached on the last step is fine.
            let mut probe = Vec::new();
            let done = rewrite_once(&cur, &rules, builtins, &mut probe).is_none()
                && simplify_noted(&cur, builtins).0 == cur;
            let partial = ComputeResult { result: cur, trace };
            return if done {
                Ok(partial)
            } else {
                Err(ComputeError::StepLimitExceeded {
                    limit: max_steps,
                    partial,
                })
            };
        }
    }
}
