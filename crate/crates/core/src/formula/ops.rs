use std::collections::{BTreeMap, BTreeSet};

use super::{Binder, Formula, Range};

/// Pattern-variable assignment produced by [`match_pattern`].
pub type Bindings = BTreeMap<String, Formula>;

/// Names of variables with at least one occurrence not bound by an
/// enclosing binder. A binder's own variables are bound in its condition,
/// range and body.
pub fn free_variables(f: &Formula) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    collect_free(f, &mut Vec::new(), &mut out);
    out
}

fn collect_free<'a>(f: &'a Formula, bound: &mut Vec<&'a str>, out: &mut BTreeSet<String>) {
    match f {
        Formula::Var(name) => {
            if !bound.contains(&name.as_str()) {
                out.insert(name.clone());
            }
        }
        Formula::Forall(binder, _) | Formula::Exists(binder, _) => {
            let mark = bound.len();
            bound.extend(binder.vars.iter().map(String::as_str));
            for child in f.children() {
                collect_free(child, bound, out);
            }
            bound.truncate(mark);
        }
        _ => {
            for child in f.children() {
                collect_free(child, bound, out);
            }
        }
    }
}

/// Every variable and constant name occurring anywhere in `f`, binder
/// variables included.
pub fn names_in(f: &Formula) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    collect_names(f, &mut out);
    out
}

fn collect_names(f: &Formula, out: &mut BTreeSet<String>) {
    match f {
        Formula::Var(n) | Formula::Const(n) => {
            out.insert(n.clone());
        }
        Formula::Forall(binder, _) | Formula::Exists(binder, _) => {
            out.extend(binder.vars.iter().cloned());
        }
        _ => {}
    }
    for child in f.children() {
        collect_names(child, out);
    }
}

/// `base` followed by the smallest positive integer suffix that is not in
/// `used`.
pub fn fresh_name(base: &str, used: &BTreeSet<String>) -> String {
    (1u64..)
        .map(|k| format!("{base}{k}"))
        .find(|candidate| !used.contains(candidate))
        .expect("unbounded suffix search")
}

/// Capture-avoiding simultaneous substitution of free variable
/// occurrences.
pub fn substitute(f: &Formula, map: &BTreeMap<String, Formula>) -> Formula {
    if map.is_empty() {
        return f.clone();
    }
    match f {
        Formula::Var(name) => map.get(name).cloned().unwrap_or_else(|| f.clone()),
        Formula::True
        | Formula::False
        | Formula::Const(_)
        | Formula::Int(_)
        | Formula::Rational(..) => f.clone(),
        Formula::App(head, args) => Formula::App(
            Box::new(substitute(head, map)),
            args.iter().map(|a| substitute(a, map)).collect(),
        ),
        Formula::Index(a, b) => Formula::index(substitute(a, map), substitute(b, map)),
        Formula::Set(items) => Formula::Set(items.iter().map(|i| substitute(i, map)).collect()),
        Formula::Tuple(items) => Formula::Tuple(items.iter().map(|i| substitute(i, map)).collect()),
        Formula::Length(a) => Formula::length(substitute(a, map)),
        Formula::Not(a) => Formula::not(substitute(a, map)),
        // Substituted formulas may themselves be conjunctions; keep
        // the structure as written rather than re-flattening.
        Formula::And(items) => Formula::And(items.iter().map(|i| substitute(i, map)).collect()),
        Formula::Or(items) => Formula::Or(items.iter().map(|i| substitute(i, map)).collect()),
        Formula::Implies(a, b) => Formula::implies(substitute(a, map), substitute(b, map)),
        Formula::Iff(a, b) => Formula::iff(substitute(a, map), substitute(b, map)),
        Formula::DefIff(a, b) => Formula::def_iff(substitute(a, map), substitute(b, map)),
        Formula::DefEq(a, b) => Formula::def_eq(substitute(a, map), substitute(b, map)),
        Formula::Rel(op, a, b) => Formula::rel(*op, substitute(a, map), substitute(b, map)),
        Formula::Forall(binder, body) => {
            let (binder, body) = substitute_under_binder(f, binder, body, map);
            Formula::forall(binder, body)
        }
        Formula::Exists(binder, body) => {
            let (binder, body) = substitute_under_binder(f, binder, body, map);
            Formula::exists(binder, body)
        }
    }
}

fn substitute_under_binder(
    whole: &Formula,
    binder: &Binder,
    body: &Formula,
    map: &BTreeMap<String, Formula>,
) -> (Binder, Formula) {
    let scope_free = free_variables(whole);
    let mut inner: BTreeMap<String, Formula> = map
        .iter()
        .filter(|(k, _)| !binder.binds(k) && scope_free.contains(*k))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    if inner.is_empty() {
        return (binder.clone(), body.clone());
    }
    let incoming: BTreeSet<String> = inner.values().flat_map(free_variables).collect();
    let mut used = names_in(whole);
    used.extend(incoming.iter().cloned());
    used.extend(inner.keys().cloned());
    let mut vars = Vec::with_capacity(binder.vars.len());
    for v in &binder.vars {
        if incoming.contains(v) {
            let renamed = fresh_name(v, &used);
            used.insert(renamed.clone());
            inner.insert(v.clone(), Formula::Var(renamed.clone()));
            vars.push(renamed);
        } else {
            vars.push(v.clone());
        }
    }
    let new_binder = Binder {
        vars,
        condition: binder.condition.as_ref().map(|c| substitute(c, &inner)),
        range: binder.range.as_ref().map(|r| {
            Box::new(Range {
                lo: substitute(&r.lo, &inner),
                hi: substitute(&r.hi, &inner),
            })
        }),
    };
    (new_binder, substitute(body, &inner))
}

/// Equality up to consistent renaming of bound variables.
pub fn alpha_equal(a: &Formula, b: &Formula) -> bool {
    alpha(a, b, &mut Vec::new(), &mut Vec::new())
}

fn lookup(env: &[&str], name: &str) -> Option<usize> {
    env.iter().rposition(|n| *n == name)
}

fn alpha<'a>(a: &'a Formula, b: &'a Formula, ea: &mut Vec<&'a str>, eb: &mut Vec<&'a str>) -> bool {
    match (a, b) {
        (Formula::Var(x), Formula::Var(y)) => match (lookup(ea, x), lookup(eb, y)) {
            (Some(i), Some(j)) => i == j,
            (None, None) => x == y,
            _ => false,
        },
        (Formula::Forall(ba, _), Formula::Forall(bb, _))
        | (Formula::Exists(ba, _), Formula::Exists(bb, _)) => {
            if ba.vars.len() != bb.vars.len()
                || ba.condition.is_some() != bb.condition.is_some()
                || ba.range.is_some() != bb.range.is_some()
            {
                return false;
            }
            let (ma, mb) = (ea.len(), eb.len());
            ea.extend(ba.vars.iter().map(String::as_str));
            eb.extend(bb.vars.iter().map(String::as_str));
            let ok = a
                .children()
                .into_iter()
                .zip(b.children())
                .all(|(x, y)| alpha(x, y, ea, eb));
            ea.truncate(ma);
            eb.truncate(mb);
            ok
        }
        _ => {
            if std::mem::discriminant(a) != std::mem::discriminant(b) {
                return false;
            }
            match (a, b) {
                (Formula::Const(x), Formula::Const(y)) => x == y,
                (Formula::Int(x), Formula::Int(y)) => x == y,
                (Formula::Rational(n1, d1), Formula::Rational(n2, d2)) => n1 == n2 && d1 == d2,
                (Formula::Rel(o1, ..), Formula::Rel(o2, ..)) if o1 != o2 => false,
                _ => {
                    let (ca, cb) = (a.children(), b.children());
                    ca.len() == cb.len() && ca.into_iter().zip(cb).all(|(x, y)| alpha(x, y, ea, eb))
                }
            }
        }
    }
}

/// Turns every free variable into a constant of the same name. Bound
/// variables are untouched.
pub fn constify_free(f: &Formula) -> Formula {
    let free = free_variables(f);
    if free.is_empty() {
        return f.clone();
    }
    let map = free
        .into_iter()
        .map(|n| (n.clone(), Formula::Const(n)))
        .collect();
    substitute(f, &map)
}

/// One-sided matching: finds bindings for `vars` (free variables of
/// `pattern`) such that the instantiated pattern is alpha-equal to
/// `target`. Existing entries in `bindings` are respected.
pub fn match_pattern(
    pattern: &Formula,
    target: &Formula,
    vars: &BTreeSet<String>,
    bindings: &mut Bindings,
) -> bool {
    let snapshot = bindings.clone();
    let ok = matcher(
        pattern,
        target,
        vars,
        bindings,
        &mut Vec::new(),
        &mut Vec::new(),
    );
    if !ok {
        *bindings = snapshot;
    }
    ok
}

fn matcher<'a>(
    p: &'a Formula,
    t: &'a Formula,
    vars: &BTreeSet<String>,
    bindings: &mut Bindings,
    ep: &mut Vec<&'a str>,
    et: &mut Vec<&'a str>,
) -> bool {
    match (p, t) {
        (Formula::Var(x), _) if lookup(ep, x).is_none() && vars.contains(x) => {
            // Target must not mention variables bound inside the match.
            let tfree = free_variables(t);
            if et.iter().any(|n| tfree.contains(*n)) {
                return false;
            }
            match bindings.get(x) {
                Some(existing) => alpha_equal(existing, t),
                None => {
                    bindings.insert(x.clone(), t.clone());
                    true
                }
            }
        }
        (Formula::Var(x), Formula::Var(y)) => match (lookup(ep, x), lookup(et, y)) {
            (Some(i), Some(j)) => i == j,
            (None, None) => x == y,
            _ => false,
        },
        (Formula::Forall(bp, _), Formula::Forall(bt, _))
        | (Formula::Exists(bp, _), Formula::Exists(bt, _)) => {
            if bp.vars.len() != bt.vars.len()
                || bp.condition.is_some() != bt.condition.is_some()
                || bp.range.is_some() != bt.range.is_some()
            {
                return false;
            }
            let (mp, mt) = (ep.len(), et.len());
            ep.extend(bp.vars.iter().map(String::as_str));
            et.extend(bt.vars.iter().map(String::as_str));
            let ok = p
                .children()
                .into_iter()
                .zip(t.children())
                .all(|(x, y)| matcher(x, y, vars, bindings, ep, et));
            ep.truncate(mp);
            et.truncate(mt);
            ok
        }
        _ => {
            if std::mem::discriminant(p) != std::mem::discriminant(t) {
                return false;
            }
            match (p, t) {
                (Formula::Const(x), Formula::Const(y)) => x == y,
                (Formula::Int(x), Formula::Int(y)) => x == y,
                (Formula::Rational(n1, d1), Formula::Rational(n2, d2)) => n1 == n2 && d1 == d2,
                (Formula::Rel(o1, ..), Formula::Rel(o2, ..)) if o1 != o2 => false,
                _ => {
                    let (cp, ct) = (p.children(), t.children());
                    cp.len() == ct.len()
                        && cp
                            .into_iter()
                            .zip(ct)
                            .all(|(x, y)| matcher(x, y, vars, bindings, ep, et))
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse_formula;
    use super::*;

    fn p(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    fn set(names: &[&str]) -> BTreeSet<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn free_variable_examples() {
        assert_eq!(free_variables(&p("b_j >= 0")), set(&["b", "j"]));
        assert_eq!(
            free_variables(&p("forall[j = 1..|b|, b_j >= 0]")),
            set(&["b"])
        );
        assert_eq!(
            free_variables(&p("forall[x with p[x, y], q[x]]")),
            set(&["y"])
        );
        // Application heads are constants.
        assert_eq!(free_variables(&p("f[x]")), set(&["x"]));
    }

    #[test]
    fn substitution_examples() {
        let mut map = BTreeMap::new();
        map.insert("n".to_string(), p("|v|"));
        assert_eq!(
            substitute(&p("forall[w = 1..n, w <= n]"), &map),
            p("forall[w = 1..|v|, w <= |v|]")
        );

        let mut map = BTreeMap::new();
        map.insert("x".to_string(), p("t"));
        let f = p("forall[x, P[x]]");
        assert_eq!(substitute(&f, &map), f);

        let mut map = BTreeMap::new();
        map.insert("x".to_string(), p("y"));
        assert_eq!(
            substitute(&p("forall[y, y = x]"), &map),
            p("forall[y1, y1 = y]")
        );
    }

    #[test]
    fn fresh_suffix_skips_used_names() {
        let mut map = BTreeMap::new();
        map.insert("x".to_string(), p("y"));
        assert_eq!(
            substitute(&p("forall[y, y = x and y1 = y1]"), &map),
            p("forall[y2, y2 = y and y1 = y1]")
        );
    }

    #[test]
    fn alpha_examples() {
        assert!(alpha_equal(&p("forall[x, P[x]]"), &p("forall[y, P[y]]")));
        assert!(!alpha_equal(&p("forall[x, P[x]]"), &p("forall[y, Q[y]]")));
        assert!(!alpha_equal(&p("forall[x, P[x]]"), &p("forall[y, P[x]]")));
        assert!(alpha_equal(
            &p("forall[{x, y}, R[x, y]]"),
            &p("forall[{a, b}, R[a, b]]")
        ));
        assert!(!alpha_equal(
            &p("forall[{x, y}, R[x, y]]"),
            &p("forall[{a, b}, R[b, a]]")
        ));
        assert!(!alpha_equal(&p("forall[x, P[x]]"), &p("exists[x, P[x]]")));
    }

    #[test]
    fn constify_only_free() {
        let f = constify_free(&p("forall[x, R[x, y]]"));
        assert_eq!(
            f,
            Formula::forall(
                Binder::var("x"),
                Formula::app("R", vec![Formula::var("x"), Formula::constant("y")])
            )
        );
    }

    #[test]
    fn matching() {
        let vars = set(&["x"]);
        let mut b = Bindings::new();
        assert!(match_pattern(&p("q[x]"), &p("q[f[a]]"), &vars, &mut b));
        assert_eq!(b.get("x"), Some(&p("f[a]")));

        let mut b = Bindings::new();
        assert!(!match_pattern(&p("r[x, x]"), &p("r[a, c]"), &vars, &mut b));
        assert!(b.is_empty());

        // A target variable bound inside the match cannot be captured.
        let mut b = Bindings::new();
        assert!(!match_pattern(
            &p("forall[y, r[x, y]]"),
            &p("forall[z, r[z, z]]"),
            &vars,
            &mut b
        ));
        let mut b = Bindings::new();
        assert!(match_pattern(
            &p("forall[y, r[x, y]]"),
            &p("forall[z, r[a, z]]"),
            &vars,
            &mut b
        ));
        assert_eq!(b.get("x"), Some(&p("a")));
    }
}
