//! The inference rule list and the proof situations rules act on.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::builtins::{builtin_simplify, ActiveBuiltins};
use super::config::RuleState;
use crate::formula::{
    alpha_equal, free_variables, fresh_name, match_pattern, names_in, substitute, Binder, Bindings,
    Formula, RelOp,
};
use crate::session::FormulaKey;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assumption {
    pub label: String,
    pub formula: Formula,
    /// Set for assumptions taken from the knowledge base.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key: Option<FormulaKey>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Situation {
    pub goal: Formula,
    pub assumptions: Vec<Assumption>,
    /// Constants introduced during the proof, in order.
    pub constants: Vec<String>,
    pub depth: usize,
}

impl Situation {
    pub fn new(goal: Formula, assumptions: Vec<Assumption>) -> Self {
        Situation {
            goal,
            assumptions,
            constants: Vec::new(),
            depth: 0,
        }
    }

    /// A child situation with the same knowledge and a new goal.
    pub fn child(&self, goal: Formula) -> Situation {
        Situation {
            goal,
            assumptions: self.assumptions.clone(),
            constants: self.constants.clone(),
            depth: self.depth + 1,
        }
    }

    pub fn has(&self, f: &Formula) -> Option<&Assumption> {
        self.assumptions.iter().find(|a| alpha_equal(&a.formula, f))
    }

    fn fresh_label(&self) -> String {
        let used: BTreeSet<&str> = self.assumptions.iter().map(|a| a.label.as_str()).collect();
        (1..)
            .map(|k| format!("H{k}"))
            .find(|l| !used.contains(l.as_str()))
            .expect("unbounded")
    }

    /// Adds `f` unless an alpha-equal assumption exists. Returns the label
    /// under which `f` is available.
    pub fn assume(&mut self, f: Formula) -> String {
        if let Some(a) = self.has(&f) {
            return a.label.clone();
        }
        let label = self.fresh_label();
        self.assumptions.push(Assumption {
            label: label.clone(),
            formula: f,
            key: None,
        });
        label
    }

    fn used_names(&self) -> BTreeSet<String> {
        let mut used = names_in(&self.goal);
        for a in &self.assumptions {
            used.extend(names_in(&a.formula));
        }
        used.extend(self.constants.iter().cloned());
        used
    }

    /// Same goal and no assumption beyond those of `other`.
    pub fn subsumed_by(&self, other: &Situation) -> bool {
        alpha_equal(&self.goal, &other.goal)
            && self
                .assumptions
                .iter()
                .all(|a| other.has(&a.formula).is_some())
    }
}

/// Reference to an assumption used by a step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRef {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key: Option<FormulaKey>,
}

/// Data a presenter template draws on.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Explanation {
    pub slots: BTreeMap<String, String>,
    pub refs: Vec<LabelRef>,
}

impl Explanation {
    fn slot(mut self, name: &str, value: impl Into<String>) -> Self {
        self.slots.insert(name.to_string(), value.into());
        self
    }

    fn formula(self, name: &str, f: &Formula) -> Self {
        self.slot(name, f.to_string())
    }

    fn with_ref(mut self, a: &Assumption) -> Self {
        self.refs.push(LabelRef {
            label: a.label.clone(),
            key: a.key.clone(),
        });
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleApplication {
    pub rule_id: &'static str,
    /// Empty when the goal is discharged.
    pub produced: Vec<Situation>,
    pub explanation: Explanation,
}

pub(crate) struct RuleContext<'a> {
    pub builtins: &'a ActiveBuiltins,
}

type Applicability = fn(&Situation, &RuleContext) -> Vec<RuleApplication>;

#[derive(Clone, Copy)]
pub struct RuleInfo {
    pub id: &'static str,
    pub group_path: &'static [&'static str],
    pub default_priority: u32,
    pub default_explain: bool,
    apply: Applicability,
}

impl RuleInfo {
    pub fn description_key(&self) -> String {
        format!("rule.{}", self.id)
    }
}

impl std::fmt::Debug for RuleInfo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RuleInfo")
            .field("id", &self.id)
            .field("group_path", &self.group_path)
            .field("default_priority", &self.default_priority)
            .finish()
    }
}

const fn rule(
    id: &'static str,
    group_path: &'static [&'static str],
    default_priority: u32,
    apply: Applicability,
) -> RuleInfo {
    RuleInfo {
        id,
        group_path,
        default_priority,
        default_explain: true,
        apply,
    }
}

const TERMINATION: &[&str] = &["termination"];
const CONNECTIVES: &[&str] = &["connectives"];
const IMPLICATION: &[&str] = &["connectives", "implication"];
const QUANTIFIERS: &[&str] = &["quantifiers"];
const KNOWLEDGE: &[&str] = &["knowledge"];
const SIMPLIFY: &[&str] = &["simplify"];

/// The rule list in document order; ties in priority follow this order.
pub const RULES: &[RuleInfo] = &[
    rule("goal-true", TERMINATION, 1, goal_true),
    rule("goal-in-kb", TERMINATION, 2, goal_in_kb),
    rule("kb-contradiction", TERMINATION, 3, kb_contradiction),
    rule("impl-goal-direct", IMPLICATION, 10, impl_goal_direct),
    rule("and-goal-split", CONNECTIVES, 11, and_goal_split),
    rule("iff-goal-split", CONNECTIVES, 12, iff_goal_split),
    rule("and-kb-split", CONNECTIVES, 13, and_kb_split),
    rule("or-kb-split", CONNECTIVES, 14, or_kb_split),
    rule("not-goal", CONNECTIVES, 16, not_goal),
    rule("or-goal", CONNECTIVES, 18, or_goal),
    rule(
        "impl-goal-contrapose",
        IMPLICATION,
        20,
        impl_goal_contrapose,
    ),
    rule("forall-goal-intro", QUANTIFIERS, 30, forall_goal_intro),
    rule(
        "exists-goal-instantiate",
        QUANTIFIERS,
        31,
        exists_goal_instantiate,
    ),
    rule(
        "forall-kb-instantiate",
        QUANTIFIERS,
        32,
        forall_kb_instantiate,
    ),
    rule("modus-ponens", KNOWLEDGE, 50, modus_ponens),
    rule("expand-definition", KNOWLEDGE, 51, expand_definition),
    rule("builtin-simplify-goal", SIMPLIFY, 70, builtin_simplify_goal),
];

pub fn rule_info(id: &str) -> Option<&'static RuleInfo> {
    RULES.iter().find(|r| r.id == id)
}

/// Active rules ordered by priority, then list order.
pub fn ordered_rules(states: &BTreeMap<String, RuleState>) -> Vec<(&'static RuleInfo, RuleState)> {
    let mut out: Vec<(usize, &'static RuleInfo, RuleState)> = RULES
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let state = states.get(r.id).cloned().unwrap_or(RuleState {
                rule_id: r.id.to_string(),
                active: true,
                priority: r.default_priority,
                explain: r.default_explain,
            });
            (i, r, state)
        })
        .filter(|(_, _, s)| s.active)
        .collect();
    out.sort_by_key(|(i, _, s)| (s.priority, *i));
    out.into_iter().map(|(_, r, s)| (r, s)).collect()
}

/// Applications of the active rules in trial order.
pub fn applicable_rules(
    situation: &Situation,
    states: &BTreeMap<String, RuleState>,
    builtins: &ActiveBuiltins,
) -> Vec<RuleApplication> {
    let ctx = RuleContext { builtins };
    ordered_rules(states)
        .into_iter()
        .flat_map(|(r, _)| (r.apply)(situation, &ctx))
        .collect()
}

fn discharge(rule_id: &'static str, explanation: Explanation) -> Vec<RuleApplication> {
    vec![RuleApplication {
        rule_id,
        produced: Vec::new(),
        explanation,
    }]
}

fn one(
    rule_id: &'static str,
    produced: Vec<Situation>,
    explanation: Explanation,
) -> Vec<RuleApplication> {
    vec![RuleApplication {
        rule_id,
        produced,
        explanation,
    }]
}

/// Negation that cancels an outer `not`.
pub fn negate(f: &Formula) -> Formula {
    match f {
        Formula::Not(x) => x.as_ref().clone(),
        Formula::True => Formula::False,
        Formula::False => Formula::True,
        _ => Formula::not(f.clone()),
    }
}

fn goal_true(s: &Situation, _: &RuleContext) -> Vec<RuleApplication> {
    let trivial = match &s.goal {
        Formula::True => true,
        Formula::Rel(RelOp::Eq, a, b) => alpha_equal(a, b),
        _ => false,
    };
    if trivial {
        discharge("goal-true", Explanation::default().formula("goal", &s.goal))
    } else {
        Vec::new()
    }
}

fn goal_in_kb(s: &Situation, _: &RuleContext) -> Vec<RuleApplication> {
    match s.has(&s.goal) {
        Some(a) => discharge(
            "goal-in-kb",
            Explanation::default().formula("goal", &s.goal).with_ref(a),
        ),
        None => Vec::new(),
    }
}

fn kb_contradiction(s: &Situation, _: &RuleContext) -> Vec<RuleApplication> {
    if let Some(a) = s.assumptions.iter().find(|a| a.formula == Formula::False) {
        return discharge(
            "kb-contradiction",
            Explanation::default()
                .formula("formula", &a.formula)
                .with_ref(a)
                .with_ref(a),
        );
    }
    for neg in &s.assumptions {
        if let Formula::Not(inner) = &neg.formula {
            if let Some(pos) = s.has(inner) {
                return discharge(
                    "kb-contradiction",
                    Explanation::default()
                        .formula("formula", inner)
                        .with_ref(pos)
                        .with_ref(neg),
                );
            }
        }
    }
    Vec::new()
}

fn impl_goal_direct(s: &Situation, _: &RuleContext) -> Vec<RuleApplication> {
    let Formula::Implies(a, b) = &s.goal else {
        return Vec::new();
    };
    let mut next = s.child(b.as_ref().clone());
    let label = next.assume(a.as_ref().clone());
    one(
        "impl-goal-direct",
        vec![next],
        Explanation::default()
            .formula("assumption", a)
            .slot("label", label)
            .formula("goal", b),
    )
}

fn impl_goal_contrapose(s: &Situation, _: &RuleContext) -> Vec<RuleApplication> {
    let Formula::Implies(a, b) = &s.goal else {
        return Vec::new();
    };
    let (na, nb) = (negate(a), negate(b));
    let mut next = s.child(na.clone());
    let label = next.assume(nb.clone());
    one(
        "impl-goal-contrapose",
        vec![next],
        Explanation::default()
            .formula("assumption", &nb)
            .slot("label", label)
            .formula("goal", &na),
    )
}

fn and_goal_split(s: &Situation, _: &RuleContext) -> Vec<RuleApplication> {
    let Formula::And(items) = &s.goal else {
        return Vec::new();
    };
    one(
        "and-goal-split",
        items.iter().map(|c| s.child(c.clone())).collect(),
        Explanation::default()
            .slot("count", items.len().to_string())
            .slot("goals", join(items)),
    )
}

fn iff_goal_split(s: &Situation, _: &RuleContext) -> Vec<RuleApplication> {
    let Formula::Iff(a, b) = &s.goal else {
        return Vec::new();
    };
    let fwd = Formula::implies(a.as_ref().clone(), b.as_ref().clone());
    let bwd = Formula::implies(b.as_ref().clone(), a.as_ref().clone());
    one(
        "iff-goal-split",
        vec![s.child(fwd.clone()), s.child(bwd.clone())],
        Explanation::default()
            .formula("forward", &fwd)
            .formula("backward", &bwd),
    )
}

fn without(s: &Situation, index: usize) -> Situation {
    let mut next = s.child(s.goal.clone());
    next.assumptions.remove(index);
    next
}

fn and_kb_split(s: &Situation, _: &RuleContext) -> Vec<RuleApplication> {
    let Some(i) = s
        .assumptions
        .iter()
        .position(|a| matches!(a.formula, Formula::And(_)))
    else {
        return Vec::new();
    };
    let Formula::And(items) = &s.assumptions[i].formula else {
        unreachable!()
    };
    let mut next = without(s, i);
    let labels: Vec<String> = items.iter().map(|c| next.assume(c.clone())).collect();
    one(
        "and-kb-split",
        vec![next],
        Explanation::default()
            .slot("formulas", join(items))
            .slot("labels", labels.join(", "))
            .with_ref(&s.assumptions[i]),
    )
}

fn or_kb_split(s: &Situation, _: &RuleContext) -> Vec<RuleApplication> {
    let Some(i) = s
        .assumptions
        .iter()
        .position(|a| matches!(a.formula, Formula::Or(_)))
    else {
        return Vec::new();
    };
    let Formula::Or(items) = &s.assumptions[i].formula else {
        unreachable!()
    };
    let produced = items
        .iter()
        .map(|d| {
            let mut next = without(s, i);
            next.assume(d.clone());
            next
        })
        .collect();
    one(
        "or-kb-split",
        produced,
        Explanation::default()
            .slot("count", items.len().to_string())
            .slot("cases", join(items))
            .with_ref(&s.assumptions[i]),
    )
}

fn not_goal(s: &Situation, _: &RuleContext) -> Vec<RuleApplication> {
    let Formula::Not(a) = &s.goal else {
        return Vec::new();
    };
    let mut next = s.child(Formula::False);
    let label = next.assume(a.as_ref().clone());
    one(
        "not-goal",
        vec![next],
        Explanation::default()
            .formula("assumption", a)
            .slot("label", label),
    )
}

fn or_goal(s: &Situation, _: &RuleContext) -> Vec<RuleApplication> {
    let Formula::Or(items) = &s.goal else {
        return Vec::new();
    };
    let (first, rest) = items.split_first().expect("flattened or has two items");
    let mut next = s.child(first.clone());
    let negs: Vec<Formula> = rest.iter().map(negate).collect();
    for n in &negs {
        next.assume(n.clone());
    }
    one(
        "or-goal",
        vec![next],
        Explanation::default()
            .formula("goal", first)
            .slot("assumptions", join(&negs)),
    )
}

/// Instantiates a binder with `values` (one per variable) into the
/// assumptions it yields and the instantiated body.
fn instantiate(binder: &Binder, body: &Formula, values: &[Formula]) -> (Vec<Formula>, Formula) {
    let map: BTreeMap<String, Formula> = binder
        .vars
        .iter()
        .cloned()
        .zip(values.iter().cloned())
        .collect();
    let mut conditions = Vec::new();
    if let Some(r) = &binder.range {
        let v = &values[0];
        conditions.push(Formula::rel(RelOp::Le, substitute(&r.lo, &map), v.clone()));
        conditions.push(Formula::rel(RelOp::Le, v.clone(), substitute(&r.hi, &map)));
    }
    if let Some(c) = &binder.condition {
        conditions.push(substitute(c, &map));
    }
    (conditions, substitute(body, &map))
}

/// Splitting a literal range into cases is limited to this many steps.
const MAX_RANGE_SPLIT: i64 = 8;

fn forall_goal_intro(s: &Situation, _: &RuleContext) -> Vec<RuleApplication> {
    let Formula::Forall(binder, body) = &s.goal else {
        return Vec::new();
    };
    if let Some(r) = &binder.range {
        if let (Formula::Int(lo), Formula::Int(hi)) = (&r.lo, &r.hi) {
            if hi.saturating_sub(*lo) <= MAX_RANGE_SPLIT {
                let var = &binder.vars[0];
                let produced: Vec<Situation> = (*lo..=*hi)
                    .map(|k| {
                        let value = Formula::Int(k);
                        let map = BTreeMap::from([(var.clone(), value.clone())]);
                        let mut next = s.child(substitute(body, &map));
                        if let Some(c) = &binder.condition {
                            next.assume(substitute(c, &map));
                        }
                        next
                    })
                    .collect();
                return one(
                    "forall-goal-intro",
                    produced,
                    Explanation::default()
                        .slot("variant", "cases")
                        .slot("variable", var.clone())
                        .slot(
                            "cases",
                            (*lo..=*hi)
                                .map(|k| k.to_string())
                                .collect::<Vec<_>>()
                                .join(", "),
                        ),
                );
            }
        }
    }
    let mut used = s.used_names();
    let mut values = Vec::new();
    let mut names = Vec::new();
    for v in &binder.vars {
        let c = fresh_name(v, &used);
        used.insert(c.clone());
        names.push(c.clone());
        values.push(Formula::Const(c));
    }
    let (conditions, goal) = instantiate(binder, body, &values);
    let mut next = s.child(goal.clone());
    next.constants.extend(names.iter().cloned());
    let mut labels = Vec::new();
    for c in conditions {
        labels.push(next.assume(c));
    }
    if binder.range.is_some() {
        labels.push(next.assume(Formula::app("isInteger", vec![values[0].clone()])));
    }
    one(
        "forall-goal-intro",
        vec![next],
        Explanation::default()
            .slot("constants", names.join(", "))
            .slot("labels", labels.join(", "))
            .formula("goal", &goal),
    )
}

fn is_term_position_ground(f: &Formula) -> bool {
    free_variables(f).is_empty()
}

fn collect_terms(f: &Formula, out: &mut Vec<Formula>, in_term: bool) {
    if in_term
        && is_term_position_ground(f)
        && !matches!(f, Formula::True | Formula::False)
        && !out.iter().any(|t| alpha_equal(t, f))
    {
        out.push(f.clone());
    }
    match f {
        Formula::App(_, args) => args.iter().for_each(|a| collect_terms(a, out, true)),
        Formula::Rel(_, a, b) | Formula::Index(a, b) => {
            collect_terms(a, out, true);
            collect_terms(b, out, true);
        }
        Formula::Length(a) => collect_terms(a, out, true),
        Formula::Set(items) | Formula::Tuple(items) => {
            items.iter().for_each(|a| collect_terms(a, out, true))
        }
        _ => f
            .children()
            .into_iter()
            .for_each(|c| collect_terms(c, out, false)),
    }
}

const MAX_WITNESSES: usize = 12;

fn exists_goal_instantiate(s: &Situation, _: &RuleContext) -> Vec<RuleApplication> {
    let Formula::Exists(binder, body) = &s.goal else {
        return Vec::new();
    };
    let mut terms: Vec<Formula> = s
        .constants
        .iter()
        .map(|c| Formula::Const(c.clone()))
        .collect();
    collect_terms(&s.goal, &mut terms, false);
    for a in &s.assumptions {
        collect_terms(&a.formula, &mut terms, false);
    }
    let mut dedup: Vec<Formula> = Vec::new();
    for t in terms {
        if !dedup.iter().any(|d| alpha_equal(d, &t)) {
            dedup.push(t);
        }
    }
    let n = binder.vars.len();
    let mut tuples: Vec<Vec<Formula>> = vec![Vec::new()];
    for _ in 0..n {
        tuples = tuples
            .into_iter()
            .flat_map(|prefix| {
                dedup.iter().map(move |t| {
                    let mut v = prefix.clone();
                    v.push(t.clone());
                    v
                })
            })
            .take(MAX_WITNESSES)
            .collect();
    }
    tuples
        .into_iter()
        .map(|values| {
            let (mut conds, inst) = instantiate(binder, body, &values);
            conds.push(inst);
            let goal = Formula::and(conds);
            RuleApplication {
                rule_id: "exists-goal-instantiate",
                produced: vec![s.child(goal.clone())],
                explanation: Explanation::default()
                    .slot("terms", join(&values))
                    .formula("goal", &goal),
            }
        })
        .collect()
}

/// Atomic subformulas with the variables bound on the way to them.
fn atoms<'a>(f: &'a Formula, bound: &mut Vec<String>, out: &mut Vec<(&'a Formula, Vec<String>)>) {
    match f {
        Formula::Not(_)
        | Formula::And(_)
        | Formula::Or(_)
        | Formula::Implies(..)
        | Formula::Iff(..)
        | Formula::DefIff(..) => f.children().into_iter().for_each(|c| atoms(c, bound, out)),
        Formula::Forall(b, _) | Formula::Exists(b, _) => {
            let mark = bound.len();
            bound.extend(b.vars.iter().cloned());
            f.children().into_iter().for_each(|c| atoms(c, bound, out));
            bound.truncate(mark);
        }
        Formula::True | Formula::False => {}
        _ => out.push((f, bound.clone())),
    }
}

fn ground_atoms(s: &Situation) -> Vec<&Formula> {
    fn push_all<'a>(f: &'a Formula, out: &mut Vec<&'a Formula>) {
        let mut found = Vec::new();
        atoms(f, &mut Vec::new(), &mut found);
        for (a, bound) in found {
            if bound.is_empty() && free_variables(a).is_empty() {
                out.push(a);
            }
        }
    }
    let mut out = Vec::new();
    push_all(&s.goal, &mut out);
    for a in &s.assumptions {
        if !matches!(a.formula, Formula::Forall(..)) {
            push_all(&a.formula, &mut out);
        }
    }
    out
}

fn forall_kb_instantiate(s: &Situation, _: &RuleContext) -> Vec<RuleApplication> {
    let targets = ground_atoms(s);
    let mut next = s.child(s.goal.clone());
    let mut added: Vec<Formula> = Vec::new();
    let mut explanation = Explanation::default();
    for a in &s.assumptions {
        let Formula::Forall(binder, body) = &a.formula else {
            continue;
        };
        let outer: BTreeSet<String> = binder.vars.iter().cloned().collect();
        let mut patterns = Vec::new();
        atoms(&a.formula, &mut Vec::new(), &mut patterns);
        let mut used_here = false;
        for (pattern, bound) in patterns {
            let vars: BTreeSet<String> = bound.into_iter().collect();
            if !free_variables(pattern).iter().any(|v| outer.contains(v)) {
                continue;
            }
            for target in &targets {
                let mut bindings = Bindings::new();
                if !match_pattern(pattern, target, &vars, &mut bindings) {
                    continue;
                }
                let Some(values) = binder
                    .vars
                    .iter()
                    .map(|v| bindings.get(v).cloned())
                    .collect::<Option<Vec<_>>>()
                else {
                    continue;
                };
                let (conds, inst) = instantiate(binder, body, &values);
                let instance = if conds.is_empty() {
                    inst
                } else {
                    Formula::implies(Formula::and(conds), inst)
                };
                if next.has(&instance).is_none() {
                    next.assume(instance.clone());
                    added.push(instance);
                    used_here = true;
                }
            }
        }
        if used_here {
            explanation = explanation.with_ref(a);
        }
    }
    if added.is_empty() {
        return Vec::new();
    }
    one(
        "forall-kb-instantiate",
        vec![next],
        explanation.slot("instances", join(&added)),
    )
}

fn modus_ponens(s: &Situation, _: &RuleContext) -> Vec<RuleApplication> {
    let mut out = Vec::new();
    let mut push = |a: &Assumption, premise: &Formula| {
        out.push(RuleApplication {
            rule_id: "modus-ponens",
            produced: vec![s.child(premise.clone())],
            explanation: Explanation::default()
                .formula("goal", premise)
                .formula("conclusion", &s.goal)
                .with_ref(a),
        });
    };
    for a in &s.assumptions {
        match &a.formula {
            Formula::Implies(p, c) => {
                let hit = alpha_equal(c, &s.goal)
                    || matches!(c.as_ref(), Formula::And(items) if items.iter().any(|i| alpha_equal(i, &s.goal)));
                if hit {
                    push(a, p);
                }
            }
            Formula::Iff(l, r) => {
                if alpha_equal(r, &s.goal) {
                    push(a, l);
                } else if alpha_equal(l, &s.goal) {
                    push(a, r);
                }
            }
            Formula::Not(x) if s.goal == Formula::False => push(a, x),
            _ => {}
        }
    }
    out
}

struct Definition<'a> {
    vars: BTreeSet<String>,
    conditions: Vec<&'a Formula>,
    lhs: &'a Formula,
    rhs: &'a Formula,
    source: &'a Assumption,
}

fn definitions(s: &Situation) -> Vec<Definition<'_>> {
    let mut out = Vec::new();
    for a in &s.assumptions {
        let mut vars = BTreeSet::new();
        let mut conditions = Vec::new();
        let mut f = &a.formula;
        while let Formula::Forall(b, body) = f {
            if b.range.is_some() {
                break;
            }
            vars.extend(b.vars.iter().cloned());
            if let Some(c) = &b.condition {
                conditions.push(c);
            }
            f = body;
        }
        if let Formula::DefIff(l, r) | Formula::DefEq(l, r) = f {
            out.push(Definition {
                vars,
                conditions,
                lhs: l,
                rhs: r,
                source: a,
            });
        }
    }
    out
}

/// Rewrites outermost occurrences of definition left-hand sides. Returns
/// the indices of the definitions used.
fn unfold(f: &Formula, defs: &[Definition], s: &Situation, used: &mut BTreeSet<usize>) -> Formula {
    for (i, d) in defs.iter().enumerate() {
        let mut bindings = Bindings::new();
        if match_pattern(d.lhs, f, &d.vars, &mut bindings)
            && d.vars.iter().all(|v| bindings.contains_key(v))
        {
            let conditions_hold = d
                .conditions
                .iter()
                .all(|c| s.has(&substitute(c, &bindings)).is_some());
            if conditions_hold {
                used.insert(i);
                return substitute(d.rhs, &bindings);
            }
        }
    }
    f.map_children(|c| unfold(c, defs, s, used))
}

fn expand_definition(s: &Situation, _: &RuleContext) -> Vec<RuleApplication> {
    let defs = definitions(s);
    if defs.is_empty() {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut used = BTreeSet::new();
    let goal = unfold(&s.goal, &defs, s, &mut used);
    if goal != s.goal {
        let mut e = Explanation::default().formula("goal", &goal);
        for i in &used {
            e = e.with_ref(defs[*i].source);
        }
        out.push(RuleApplication {
            rule_id: "expand-definition",
            produced: vec![s.child(goal)],
            explanation: e,
        });
    }
    let mut used = BTreeSet::new();
    let mut next = s.child(s.goal.clone());
    let mut changed = Vec::new();
    for (i, a) in s.assumptions.iter().enumerate() {
        if defs.iter().any(|d| std::ptr::eq(d.source, a)) {
            continue;
        }
        let unfolded = unfold(&a.formula, &defs, s, &mut used);
        if unfolded != a.formula && s.has(&unfolded).is_none() {
            next.assumptions[i].formula = unfolded.clone();
            changed.push(unfolded);
        }
    }
    if !changed.is_empty() {
        let mut e = Explanation::default().slot("formulas", join(&changed));
        for i in &used {
            e = e.with_ref(defs[*i].source);
        }
        out.push(RuleApplication {
            rule_id: "expand-definition",
            produced: vec![next],
            explanation: e.slot("variant", "kb"),
        });
    }
    out
}

fn builtin_simplify_goal(s: &Situation, ctx: &RuleContext) -> Vec<RuleApplication> {
    let goal = builtin_simplify(&s.goal, ctx.builtins);
    if goal == s.goal {
        return Vec::new();
    }
    one(
        "builtin-simplify-goal",
        vec![s.child(goal.clone())],
        Explanation::default().formula("goal", &goal),
    )
}

fn join(items: &[Formula]) -> String {
    items
        .iter()
        .map(|f| f.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{constify_free, parse_formula};
    use crate::prover::config::default_rule_states;

    fn p(s: &str) -> Formula {
        constify_free(&parse_formula(s).unwrap())
    }

    fn sit(goal: &str, kb: &[&str]) -> Situation {
        Situation::new(
            p(goal),
            kb.iter()
                .enumerate()
                .map(|(i, f)| Assumption {
                    label: format!("K{}", i + 1),
                    formula: p(f),
                    key: None,
                })
                .collect(),
        )
    }

    fn ids(apps: &[RuleApplication]) -> Vec<&'static str> {
        apps.iter().map(|a| a.rule_id).collect()
    }

    #[test]
    fn rule_ids_unique_and_priorities_in_range() {
        let ids: BTreeSet<&str> = RULES.iter().map(|r| r.id).collect();
        assert_eq!(ids.len(), RULES.len());
        assert!(RULES
            .iter()
            .all(|r| (1..=100).contains(&r.default_priority)));
    }

    #[test]
    fn goal_true_first() {
        let apps = applicable_rules(
            &sit("True", &[]),
            &default_rule_states(),
            &ActiveBuiltins::none(),
        );
        assert_eq!(apps[0].rule_id, "goal-true");
    }

    #[test]
    fn direct_before_contrapose_and_deactivation() {
        let s = sit("p => q", &[]);
        let mut states = default_rule_states();
        assert_eq!(
            ids(&applicable_rules(&s, &states, &ActiveBuiltins::none())),
            ["impl-goal-direct", "impl-goal-contrapose"]
        );
        states.get_mut("impl-goal-contrapose").unwrap().active = false;
        assert_eq!(
            ids(&applicable_rules(&s, &states, &ActiveBuiltins::none())),
            ["impl-goal-direct"]
        );
        let mut states = default_rule_states();
        states.get_mut("impl-goal-contrapose").unwrap().priority = 5;
        assert_eq!(
            ids(&applicable_rules(&s, &states, &ActiveBuiltins::none())),
            ["impl-goal-contrapose", "impl-goal-direct"]
        );
    }

    #[test]
    fn forall_intro_uses_fresh_constant_and_range_facts() {
        let s = sit("forall[j = 1..n, b_j >= 0]", &["forall[j, q[j]]"]);
        let apps = forall_goal_intro(
            &s,
            &RuleContext {
                builtins: &ActiveBuiltins::none(),
            },
        );
        let next = &apps[0].produced[0];
        assert_eq!(next.goal, p("b_j1 >= 0"));
        assert_eq!(next.constants, ["j1"]);
        let added: Vec<&Formula> = next.assumptions[1..].iter().map(|a| &a.formula).collect();
        assert_eq!(added, [&p("1 <= j1"), &p("j1 <= n"), &p("isInteger[j1]")]);
    }

    #[test]
    fn literal_range_splits() {
        let s = sit("forall[j = 1..3, q[j]]", &[]);
        let apps = forall_goal_intro(
            &s,
            &RuleContext {
                builtins: &ActiveBuiltins::none(),
            },
        );
        let goals: Vec<&Formula> = apps[0].produced.iter().map(|s| &s.goal).collect();
        assert_eq!(goals, [&p("q[1]"), &p("q[2]"), &p("q[3]")]);
        let empty = sit("forall[j = 3..1, q[j]]", &[]);
        let apps = forall_goal_intro(
            &empty,
            &RuleContext {
                builtins: &ActiveBuiltins::none(),
            },
        );
        assert!(apps[0].produced.is_empty());
    }

    #[test]
    fn kb_instantiation_by_matching() {
        let s = sit("q[a]", &["forall[x, p[x] => q[x]]", "forall[x, p[x]]"]);
        let apps = forall_kb_instantiate(
            &s,
            &RuleContext {
                builtins: &ActiveBuiltins::none(),
            },
        );
        let next = &apps[0].produced[0];
        assert_eq!(next.assumptions.last().unwrap().formula, p("p[a] => q[a]"));
        let again = forall_kb_instantiate(
            next,
            &RuleContext {
                builtins: &ActiveBuiltins::none(),
            },
        );
        assert_eq!(
            again[0].produced[0].assumptions.last().unwrap().formula,
            p("p[a]")
        );
        let third = forall_kb_instantiate(
            &again[0].produced[0],
            &RuleContext {
                builtins: &ActiveBuiltins::none(),
            },
        );
        assert!(third.is_empty());
    }

    #[test]
    fn definitions_unfold_in_goal() {
        let s = sit(
            "bids[c]",
            &["forall[b, bids[b] :<=> forall[j = 1..|b|, b_j >= 0]]"],
        );
        let apps = expand_definition(
            &s,
            &RuleContext {
                builtins: &ActiveBuiltins::none(),
            },
        );
        assert_eq!(apps[0].produced[0].goal, p("forall[j = 1..|c|, c_j >= 0]"));
    }

    #[test]
    fn or_goal_assumes_negations() {
        let s = sit("p or not p", &[]);
        let apps = or_goal(
            &s,
            &RuleContext {
                builtins: &ActiveBuiltins::none(),
            },
        );
        let next = &apps[0].produced[0];
        assert_eq!(next.goal, p("p"));
        assert!(next.has(&p("p")).is_some());
    }

    #[test]
    fn modus_ponens_backward() {
        let s = sit("q", &["p => q", "q <=> r", "not s"]);
        let apps = modus_ponens(
            &s,
            &RuleContext {
                builtins: &ActiveBuiltins::none(),
            },
        );
        let goals: Vec<&Formula> = apps.iter().map(|a| &a.produced[0].goal).collect();
        assert_eq!(goals, [&p("p"), &p("r")]);
        let falsum = sit("False", &["not s"]);
        let apps = modus_ponens(
            &falsum,
            &RuleContext {
                builtins: &ActiveBuiltins::none(),
            },
        );
        assert_eq!(apps[0].produced[0].goal, p("s"));
    }

    #[test]
    fn assumption_labels_stay_unique() {
        let mut s = sit("q", &["H1"]);
        s.assumptions[0].label = "H1".into();
        let l = s.assume(p("r"));
        assert_eq!(l, "H2");
        assert_eq!(s.assume(p("r")), "H2");
    }
}
