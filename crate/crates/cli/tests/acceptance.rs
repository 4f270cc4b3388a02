//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use tma_core::document::{load_document, CellId, CellKind, Document};
use tma_core::formula::{alpha_equal, format, free_variables, parse_formula, Style};
use tma_core::i18n::Catalogs;
use tma_core::presenter::render_proof;
use tma_core::prover::{prove, ProofEvent, ProofTree, SettingsSnapshot};
use tma_core::session::{FormulaEntry, FormulaKey, Session};
use tma_core::{Binder, Formula, RelOp};

type Outcome = Result<(), String>;
type Criterion = (&'static str, fn() -> Outcome);

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Outcome {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------- elaboration

fn v(n: &str) -> Formula {
    Formula::var(n)
}

fn app(h: &str, args: &[&str]) -> Formula {
    Formula::app(h, args.iter().map(|a| v(a)).collect())
}

fn auction_session() -> (Session, PathBuf, Duration) {
    let doc = load_document(root().join("samples/auction.tnb")).unwrap();
    let path = doc.path.clone();
    let mut s = Session::new();
    s.open_document(doc);
    let t = Instant::now();
    s.submit_document(&path).unwrap();
    (s, path, t.elapsed())
}

fn elaboration_bids() -> Outcome {
    let (s, path, took) = auction_session();
    let got = &s.entry(&FormulaKey::new(&path, CellId(5))).unwrap().formula;
    let expected = Formula::forall(
        Binder::var("b"),
        Formula::def_iff(
            app("bids", &["b"]),
            Formula::forall(
                Binder::var("j").with_range(Formula::Int(1), Formula::length(v("b"))),
                Formula::rel(RelOp::Ge, Formula::index(v("b"), v("j")), Formula::Int(0)),
            ),
        ),
    );
    check(got == &expected, || {
        format!("got {}", format(got, Style::Ascii))
    })?;
    check(took < Duration::from_secs(1), || format!("took {took:?}"))
}

fn elaboration_lemma() -> Outcome {
    let (s, path, took) = auction_session();
    let got = &s.entry(&FormulaKey::new(&path, CellId(9))).unwrap().formula;
    let len = |n: &str| Formula::length(v(n));
    let inner = Formula::forall(
        Binder::var("winner")
            .with_range(Formula::Int(1), len("v"))
            .with_condition(Formula::rel(
                RelOp::Eq,
                Formula::index(v("x"), v("winner")),
                Formula::Int(1),
            )),
        app("secondPriceAuctionWinner", &["b", "x", "p", "winner"]),
    );
    let expected = Formula::forall(
        Binder::var("v").with_condition(app("valuation", &["v"])),
        Formula::forall(
            Binder::var("b").with_condition(Formula::and(vec![
                app("bids", &["b"]),
                Formula::rel(RelOp::Eq, len("b"), len("v")),
            ])),
            Formula::forall(
                Binder::var("x").with_condition(app("allocation", &["b", "x"])),
                Formula::forall(
                    Binder::var("p").with_condition(app("vickreyPayment", &["b", "p"])),
                    Formula::implies(app("secondPriceAuction", &["b", "x", "p"]), inner),
                ),
            ),
        ),
    );
    check(got == &expected, || {
        format!("got {}", format(got, Style::Ascii))
    })?;
    check(free_variables(got).is_empty(), || {
        "formula is not closed".into()
    })?;
    check(took < Duration::from_secs(1), || format!("took {took:?}"))
}

// ---------------------------------------------------------------- parser

const CORPUS: &[&str] = &[
    "p",
    "True",
    "False",
    "42",
    "-7",
    "rat[3, 4]",
    "rat[-1, 2]",
    "f[x]",
    "f[]",
    "g[x, y, z]",
    "f[g[x], h[y, 1]]",
    "b_j",
    "b_(j + 1)",
    "x_winner = 1",
    "|b|",
    "|b| = |v|",
    "{1, 2, 3}",
    "{}",
    "⟨a, b⟩",
    "tuple[a, b, c]",
    "1 + 2",
    "a - b - c",
    "a - (b - c)",
    "a * b + c",
    "a * (b + c)",
    "a / b",
    "2 ^ 3 ^ 2",
    "(2 ^ 3) ^ 2",
    "-x",
    "-(a + b)",
    "a = b",
    "a != b",
    "a < b",
    "a <= b",
    "a > b",
    "a >= b",
    "x in s",
    "not p",
    "not not p",
    "not (a = b)",
    "p and q",
    "p and q and r",
    "p or q",
    "p or q and r",
    "(p or q) and r",
    "p => q",
    "p => q => r",
    "(p => q) => r",
    "p <=> q",
    "(p <=> q) <=> r",
    "p and q => r or s",
    "bids[b] :<=> forall[j = 1..|b|, b_j >= 0]",
    "f[x] := x + 1",
    "forall[x, p[x]]",
    "forall[x with p[x], q[x]]",
    "forall[x with p[x], r[x], q[x]]",
    "forall[{x, y}, r[x, y]]",
    "exists[x, p[x]]",
    "exists[x with p[x], q[x] and r[x]]",
    "forall[i = 1..n, a_i > 0]",
    "forall[i = 1,…,n with a_i > 0, b_i < 1]",
    "∀ x with p[x] : q[x]",
    "∀ x, y : r[x, y] ⇒ r[y, x]",
    "∃ x : p[x] ∧ ¬ q[x]",
    "forall[x, forall[y, p[x, y]]] => exists[z, p[z, z]]",
    "(forall[x, p[x]]) and q",
    "a ≤ b ∨ b ≤ a",
    "x ∈ {1, 2}",
    "sq[x] := x * x",
];

fn parser_round_trip() -> Outcome {
    check(CORPUS.len() >= 50, || {
        format!("corpus has {} formulas", CORPUS.len())
    })?;
    let mut failures = Vec::new();
    for text in CORPUS {
        let Ok(f) = parse_formula(text) else {
            failures.push(format!("{text}: does not parse"));
            continue;
        };
        for style in [Style::Ascii, Style::Unicode] {
            let printed = format(&f, style);
            match parse_formula(&printed) {
                Ok(g) if g == f => {}
                Ok(_) => failures.push(format!("{text}: {printed} reparses differently")),
                Err(e) => failures.push(format!("{text}: {printed} fails: {e}")),
            }
        }
    }
    check(failures.is_empty(), || failures.join("; "))
}

// ---------------------------------------------------------------- prover suite

struct Problem {
    name: &'static str,
    kb: &'static [&'static str],
    goal: &'static str,
    builtins: &'static [&'static str],
}

const fn p(name: &'static str, kb: &'static [&'static str], goal: &'static str) -> Problem {
    Problem {
        name,
        kb,
        goal,
        builtins: &[],
    }
}

const PROVABLE: &[Problem] = &[
    p("identity", &[], "p => p"),
    p("and-commutes", &[], "p and q => q and p"),
    p("or-commutes", &[], "p or q => q or p"),
    p("contrapositive", &[], "(p => q) => (not q => not p)"),
    p("weakening", &[], "p => (q => p)"),
    p("chain", &[], "(p => q) and (q => r) => (p => r)"),
    p("modus-ponens", &[], "p and (p => q) => q"),
    p("iff-refl", &[], "p <=> p"),
    p("and-iff", &[], "(p and q) <=> (q and p)"),
    p("detach", &["p", "p => q"], "q"),
    p("from-contraposition", &["not q => not p"], "p => q"),
    p("cases", &["p or q", "p => r", "q => r"], "r"),
    p("and-to-or", &[], "p and q => p or r"),
    p(
        "syllogism",
        &["forall[x, man[x] => mortal[x]]", "man[socrates]"],
        "mortal[socrates]",
    ),
    p(
        "two-step",
        &["forall[x, p[x] => q[x]]", "forall[x, q[x] => r[x]]", "p[a]"],
        "r[a]",
    ),
    p("forall-refl", &[], "forall[x, p[x] => p[x]]"),
    p("witness", &["p[a]"], "exists[x, p[x]]"),
    p(
        "forall-and",
        &["forall[x, p[x] and q[x]]"],
        "forall[x, q[x]]",
    ),
    p(
        "unfold",
        &["forall[x, even[x] :<=> divisible[x, 2]]", "divisible[a, 2]"],
        "even[a]",
    ),
    p(
        "binary",
        &[
            "forall[x, forall[y, parent[x, y] => ancestor[x, y]]]",
            "parent[tom, bob]",
        ],
        "ancestor[tom, bob]",
    ),
    p("instance", &[], "forall[x, p[x]] => p[a]"),
    p(
        "restate",
        &["forall[x, man[x] => mortal[x]]"],
        "forall[x, man[x] => mortal[x]]",
    ),
    Problem {
        name: "compute-square",
        kb: &["forall[x, sq[x] := x * x]"],
        goal: "sq[3] = 9",
        builtins: &["arithmetic"],
    },
];

const UNPROVABLE: &[Problem] = &[
    p("no-support", &[], "p => q"),
    p("one-of-two", &["p or q"], "p"),
    p("converse", &["forall[x, p[x] => q[x]]", "q[a]"], "p[a]"),
    p("no-witness", &[], "exists[x, p[x]]"),
];

fn entry(n: u64, text: &str) -> FormulaEntry {
    FormulaEntry {
        key: FormulaKey::new("/acceptance/suite.tnb", CellId(n)),
        label: format!("K{n}"),
        formula: parse_formula(text).unwrap_or_else(|e| panic!("{text}: {e}")),
        source_text: text.into(),
    }
}

struct Run {
    goal: FormulaEntry,
    kb: Vec<FormulaEntry>,
    snapshot: SettingsSnapshot,
}

impl Run {
    fn new(pr: &Problem) -> Self {
        Run::from_texts(pr.kb, pr.goal, pr.builtins)
    }

    fn from_texts<S: AsRef<str>>(kb: &[S], goal: &str, builtins: &[&str]) -> Self {
        let goal = entry(1000, goal);
        let kb: Vec<FormulaEntry> = kb
            .iter()
            .enumerate()
            .map(|(i, t)| entry(i as u64 + 1, t.as_ref()))
            .collect();
        let mut snapshot = SettingsSnapshot::new(goal.key.clone());
        snapshot.knowledge = kb.iter().map(|e| e.key.clone()).collect();
        snapshot.builtins = builtins.iter().map(|s| s.to_string()).collect();
        Run { goal, kb, snapshot }
    }

    fn go(&self, snapshot: &SettingsSnapshot) -> (ProofTree, Vec<ProofEvent>, Duration) {
        let mut events = Vec::new();
        let t = Instant::now();
        let tree = prove(
            &self.goal,
            &self.kb,
            snapshot,
            &mut |e| events.push(e.clone()),
            None,
        )
        .expect("suite settings are valid");
        (tree, events, t.elapsed())
    }
}

fn prover_suite() -> Outcome {
    check(PROVABLE.len() >= 20 && UNPROVABLE.len() >= 3, || {
        "suite too small".into()
    })?;
    let mut bad = Vec::new();
    for pr in PROVABLE {
        let run = Run::new(pr);
        let (tree, _, took) = run.go(&run.snapshot);
        if !tree.proved() {
            bad.push(format!("{} not proved", pr.name));
        } else if took >= Duration::from_secs(5) {
            bad.push(format!("{} took {took:?}", pr.name));
        }
    }
    for pr in UNPROVABLE {
        let run = Run::new(pr);
        let (tree, _, took) = run.go(&run.snapshot);
        if tree.proved() {
            bad.push(format!("control {} proved", pr.name));
        }
        let limit = Duration::from_secs_f64(run.snapshot.limits.timeout + 1.0);
        if took > limit {
            bad.push(format!("control {} overran its limits", pr.name));
        }
    }
    check(bad.is_empty(), || bad.join("; "))
}

// ---------------------------------------------------------------- soundness

/// Truth value of a propositional formula; anything that is not a
/// connective is an atom looked up by its printed form.
fn eval(f: &Formula, val: &BTreeMap<String, bool>) -> Option<bool> {
    Some(match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Not(a) => !eval(a, val)?,
        Formula::And(xs) => {
            let mut r = true;
            for x in xs {
                r &= eval(x, val)?;
            }
            r
        }
        Formula::Or(xs) => {
            let mut r = false;
            for x in xs {
                r |= eval(x, val)?;
            }
            r
        }
        Formula::Implies(a, b) => !eval(a, val)? || eval(b, val)?,
        Formula::Iff(a, b) => eval(a, val)? == eval(b, val)?,
        Formula::Var(_) | Formula::Const(_) => *val.get(&format(f, Style::Ascii))?,
        Formula::App(_, args) if args.is_empty() => *val.get(&format(f, Style::Ascii))?,
        _ => return None,
    })
}

fn atoms(f: &Formula, out: &mut BTreeSet<String>) -> bool {
    match f {
        Formula::True | Formula::False => true,
        Formula::Not(a) => atoms(a, out),
        Formula::And(xs) | Formula::Or(xs) => xs.iter().all(|x| atoms(x, out)),
        Formula::Implies(a, b) | Formula::Iff(a, b) => atoms(a, out) && atoms(b, out),
        Formula::Var(_) | Formula::Const(_) => {
            out.insert(format(f, Style::Ascii));
            true
        }
        Formula::App(_, args) if args.is_empty() => {
            out.insert(format(f, Style::Ascii));
            true
        }
        _ => false,
    }
}

/// `None` for non-propositional or over-sized instances.
fn tautology(kb: &[&str], goal: &str) -> Option<bool> {
    let mut premises: Vec<Formula> = kb.iter().map(|t| parse_formula(t).unwrap()).collect();
    premises.push(Formula::True);
    let claim = Formula::implies(Formula::and(premises), parse_formula(goal).unwrap());
    let mut names = BTreeSet::new();
    if !atoms(&claim, &mut names) || names.len() > 4 {
        return None;
    }
    let names: Vec<String> = names.into_iter().collect();
    for bits in 0u32..(1 << names.len()) {
        let val = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), bits & (1 << i) != 0))
            .collect();
        if !eval(&claim, &val)? {
            return Some(false);
        }
    }
    Some(true)
}

/// Every implication between two formulas of a small pool, over p, q, r.
fn generated_instances() -> Vec<String> {
    let pool = [
        "p",
        "q",
        "not p",
        "p and q",
        "p or q",
        "p => q",
        "q => p",
        "not q => not p",
        "p <=> q",
        "(p => r) and (q => r)",
        "p and not p",
        "r or not r",
    ];
    let mut out = Vec::new();
    for a in pool {
        for b in pool {
            out.push(format!("({a}) => ({b})"));
        }
    }
    out
}

fn soundness() -> Outcome {
    let mut checked = 0;
    let mut violations = Vec::new();
    let mut instances: Vec<(Vec<String>, String, String)> = PROVABLE
        .iter()
        .chain(UNPROVABLE)
        .map(|pr| {
            (
                pr.kb.iter().map(|s| s.to_string()).collect(),
                pr.goal.to_string(),
                pr.name.to_string(),
            )
        })
        .collect();
    for g in generated_instances() {
        instances.push((Vec::new(), g.clone(), g));
    }
    for (kb, goal, name) in &instances {
        let kb_refs: Vec<&str> = kb.iter().map(String::as_str).collect();
        let Some(taut) = tautology(&kb_refs, goal) else {
            continue;
        };
        checked += 1;
        let mut run = Run::from_texts(kb, goal, &[]);
        run.snapshot.limits.timeout = 2.0;
        let (tree, _, _) = run.go(&run.snapshot);
        if tree.proved() && !taut {
            violations.push(name.clone());
        }
    }
    check(checked >= 100, || {
        format!("only {checked} propositional instances")
    })?;
    check(violations.is_empty(), || {
        format!("proved non-tautologies: {}", violations.join("; "))
    })
}

// ---------------------------------------------------------------- configuration

fn configuration() -> Outcome {
    let run = Run::new(&p("designated", &[], "p => p"));
    let (direct, _, _) = run.go(&run.snapshot);
    let mut off = run.snapshot.clone();
    off.rule_states.get_mut("impl-goal-direct").unwrap().active = false;
    let (contra, _, _) = run.go(&off);
    check(direct.proved() && contra.proved(), || {
        "designated goal not proved".into()
    })?;
    let a = direct.applied_rules();
    let b = contra.applied_rules();
    check(a.first() == Some(&"impl-goal-direct"), || {
        format!("default applied {a:?}")
    })?;
    check(b.first() == Some(&"impl-goal-contrapose"), || {
        format!("deactivated applied {b:?}")
    })?;
    check(a.len() == b.len() && a[1..] == b[1..], || {
        format!("{a:?} vs {b:?}")
    })?;
    let shape = |t: &ProofTree| {
        t.nodes
            .iter()
            .map(|n| (n.node_type, n.status, n.parent, n.children.clone()))
            .collect::<Vec<_>>()
    };
    check(shape(&direct) == shape(&contra), || {
        "tree shapes differ".into()
    })
}

// ---------------------------------------------------------------- granularity

fn granularity() -> Outcome {
    let catalogs = Catalogs::english_only();
    let mut bad = Vec::new();
    let mut hidden = 0;
    for pr in PROVABLE {
        let run = Run::new(pr);
        let (tree, _, _) = run.go(&run.snapshot);
        let full = render_proof(&tree, &catalogs, "en");
        let rule_of = |t: &ProofTree, n| t.node(n).and_then(|n| n.rule_id.clone());
        let rules: BTreeSet<String> = full
            .document
            .blocks
            .iter()
            .filter_map(|b| rule_of(&tree, b.node_id))
            .collect();
        for rule in rules {
            hidden += 1;
            let mut snap = run.snapshot.clone();
            snap.rule_states.get_mut(&rule).unwrap().explain = false;
            let (fused_tree, _, _) = run.go(&snap);
            let fused = render_proof(&fused_tree, &catalogs, "en");
            let kept: Vec<&str> = full
                .document
                .blocks
                .iter()
                .filter(|b| rule_of(&tree, b.node_id).as_deref() != Some(rule.as_str()))
                .map(|b| b.text.as_str())
                .collect();
            let now: Vec<&str> = fused
                .document
                .blocks
                .iter()
                .map(|b| b.text.as_str())
                .collect();
            if kept != now {
                bad.push(format!("{}: hiding {rule} changed other blocks", pr.name));
            }
            if !fused.navigation.is_bijective() {
                bad.push(format!("{}: map not bijective without {rule}", pr.name));
            }
            let stray = fused.document.blocks.iter().any(|b| {
                fused_tree.node(b.node_id).is_some_and(|n| {
                    n.rule_id.as_deref() == Some(rule.as_str())
                        || (n.rule_id.is_some() && !n.explain)
                })
            });
            if stray {
                bad.push(format!("{}: unexplained node still has a block", pr.name));
            }
        }
        if !full.navigation.is_bijective() {
            bad.push(format!("{}: map not bijective", pr.name));
        }
    }
    check(hidden >= 20, || format!("only {hidden} rules were hidden"))?;
    check(bad.is_empty(), || bad.join("; "))
}

// ---------------------------------------------------------------- determinism

fn snapshot_determinism() -> Outcome {
    let mut bad = Vec::new();
    for pr in PROVABLE.iter().chain(UNPROVABLE) {
        let run = Run::new(pr);
        let (first, _, _) = run.go(&run.snapshot);
        let stored = serde_json::to_string(&run.snapshot).unwrap();
        let restored: SettingsSnapshot = serde_json::from_str(&stored).unwrap();
        let again = restored.restore().and_then(|c| c.snapshot());
        match again {
            Ok(snap) => {
                let (second, _, _) = run.go(&snap);
                if first != second {
                    bad.push(pr.name.to_string());
                }
            }
            Err(e) => bad.push(format!("{}: {e}", pr.name)),
        }
    }
    check(bad.is_empty(), || {
        format!("trees differ: {}", bad.join(", "))
    })
}

fn event_replay() -> Outcome {
    let mut bad = Vec::new();
    for pr in PROVABLE.iter().chain(UNPROVABLE) {
        let run = Run::new(pr);
        let (tree, events, _) = run.go(&run.snapshot);
        let wire = serde_json::to_string(&events).unwrap();
        let received: Vec<ProofEvent> = serde_json::from_str(&wire).unwrap();
        match ProofTree::replay(&received) {
            Ok(t) if t.canonical_json() == tree.canonical_json() => {}
            Ok(_) => bad.push(format!("{}: differs", pr.name)),
            Err(e) => bad.push(format!("{}: {e}", pr.name)),
        }
    }
    check(bad.is_empty(), || bad.join("; "))
}

// ---------------------------------------------------------------- archives

fn archives() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("twenty.tnb");
    let mut doc = Document::new(&path);
    for i in 0..20 {
        let text = match i % 4 {
            0 => format!("forall[x, p{i}[x] => q{i}[x]]"),
            1 => format!("c{i} = {i} + 1"),
            2 => format!("exists[y with r[y], s{i}[y, y]]"),
            _ => format!("f{i}[x] := x * {i}"),
        };
        let kind = if i % 3 == 0 {
            CellKind::labeled_formula(text, format!("L{i}"))
        } else {
            CellKind::formula(text)
        };
        doc.push_cell(CellId::ROOT, kind).unwrap();
    }
    let doc_path = doc.path.clone();
    let mut s = Session::new();
    s.open_document(doc);
    s.submit_document(&doc_path).unwrap();
    let all: BTreeSet<FormulaKey> = s.all_formulae().iter().map(|e| e.key.clone()).collect();
    check(all.len() == 20, || format!("{} entries", all.len()))?;
    let archive = dir.path().join("kb.tarch");
    s.save_archive(&all, &archive).map_err(|e| e.to_string())?;

    let mut fresh = Session::new();
    let loaded = fresh.load_archive(&archive).map_err(|e| e.to_string())?;
    check(loaded.len() == 20, || format!("loaded {}", loaded.len()))?;
    for old in s.all_formulae() {
        let Some(new) = fresh.entry(&old.key) else {
            return Err(format!("key {} lost", old.key));
        };
        check(new.label == old.label, || {
            format!("label of {} changed", old.key)
        })?;
        check(alpha_equal(&new.formula, &old.formula), || {
            format!("formula of {} changed", old.key)
        })?;
    }
    Ok(())
}

// ---------------------------------------------------------------- i18n

fn tma(lang_dir: &Path, args: &[&str]) -> (i32, String) {
    let prefs = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_tma"))
        .args(args)
        .env_remove("TMA_LANG")
        .env("TMA_CONFIG", prefs.path().join("prefs"))
        .env("TMA_LANG_DIR", lang_dir)
        .output()
        .unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
    )
}

/// Literal pieces of English catalog values and templates, split at
/// placeholders, that are long enough to be recognizable.
fn english_fragments() -> BTreeSet<String> {
    let c = Catalogs::english_only();
    let mut values: Vec<String> = c.english().entries.values().cloned().collect();
    for name in c.template_names() {
        values.push(c.template(name, "en").unwrap().to_string());
    }
    let mut out = BTreeSet::new();
    for value in values {
        let mut rest = value.as_str();
        loop {
            let (piece, tail) = match rest.find('{') {
                Some(i) => (&rest[..i], rest[i..].split_once('}').map_or("", |(_, t)| t)),
                None => (rest, ""),
            };
            for line in piece.split('\n') {
                let t = line.trim();
                if t.chars().count() >= 4 && t.chars().any(char::is_alphabetic) {
                    out.insert(t.to_string());
                }
            }
            if tail.is_empty() {
                break;
            }
            rest = tail;
        }
    }
    out
}

fn i18n() -> Outcome {
    let lang = root().join("lang");
    let samples = [("syllogism.tnb", "3"), ("contraposition.tnb", "2")];
    let fragments = english_fragments();
    check(fragments.len() >= 50, || {
        format!("only {} English fragments", fragments.len())
    })?;
    for (doc, goal) in samples {
        let doc = root().join("samples").join(doc);
        let d = doc.to_str().unwrap();
        let (code, de) = tma(&lang, &["--lang", "de", "prove", d, goal]);
        check(code == 0, || format!("German run exited {code}"))?;
        let leaked: Vec<&String> = fragments
            .iter()
            .filter(|f| de.contains(f.as_str()))
            .collect();
        check(leaked.is_empty(), || {
            format!("English in German output: {leaked:?}")
        })?;

        let (_, en) = tma(&lang, &["--lang", "en", "prove", d, goal]);
        check(en != de, || "German output equals English".into())?;
        let empty = tempfile::tempdir().unwrap();
        std::fs::write(empty.path().join("de.lang"), "").unwrap();
        let (code, fallback) = tma(empty.path(), &["--lang", "de", "prove", d, goal]);
        check(code == 0, || format!("fallback run exited {code}"))?;
        check(fallback == en, || {
            format!("fallback differs:\n{fallback}\nvs\n{en}")
        })?;
    }
    Ok(())
}

// ---------------------------------------------------------------- driver

fn main() {
    let criteria: &[Criterion] = &[
        ("elaboration fidelity: bids definition", elaboration_bids),
        ("elaboration fidelity: compact lemma", elaboration_lemma),
        ("parser round-trip", parser_round_trip),
        ("prover suite", prover_suite),
        ("soundness oracle", soundness),
        ("configuration behavior", configuration),
        ("granularity", granularity),
        ("snapshot determinism", snapshot_determinism),
        ("event replay", event_replay),
        ("archives", archives),
        ("i18n", i18n),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(()) => println!("PASS  {name} ({:.2?})", t.elapsed()),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
