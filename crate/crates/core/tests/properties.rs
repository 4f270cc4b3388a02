use std::collections::BTreeMap;

use proptest::prelude::*;

use tma_core::document::CellId;
use tma_core::formula::{alpha_equal, format, parse_formula, substitute, Style};
use tma_core::i18n::Catalogs;
use tma_core::presenter::render_proof;
use tma_core::prover::{fold_and, fold_or, prove, ProofEvent, ProofTree, SettingsSnapshot, Status};
use tma_core::session::{FormulaEntry, FormulaKey};
use tma_core::{Binder, Formula, RelOp};

const NAMES: &[&str] = &["a", "b", "x", "y", "z", "winner"];
const HEADS: &[&str] = &["f", "g", "bids", "p"];

fn name() -> impl Strategy<Value = String> {
    prop::sample::select(NAMES).prop_map(str::to_string)
}

fn leaf() -> impl Strategy<Value = Formula> {
    prop_oneof![
        Just(Formula::True),
        Just(Formula::False),
        name().prop_map(Formula::Var),
        (-50i64..500).prop_map(Formula::Int),
        (-20i64..20, 2i64..9).prop_filter_map("integral", |(n, d)| match Formula::rational(n, d) {
            Some(r @ Formula::Rational(..)) => Some(r),
            _ => None,
        }),
    ]
}

fn rel() -> impl Strategy<Value = RelOp> {
    prop::sample::select(vec![
        RelOp::Eq,
        RelOp::Neq,
        RelOp::Le,
        RelOp::Lt,
        RelOp::Ge,
        RelOp::Gt,
        RelOp::In,
    ])
}

fn binder(inner: impl Strategy<Value = Formula> + Clone) -> impl Strategy<Value = Binder> {
    prop_oneof![
        name().prop_map(Binder::var),
        (name(), inner.clone()).prop_map(|(n, c)| Binder::var(n).with_condition(c)),
        prop::collection::btree_set(name(), 2..4).prop_map(Binder::vars),
        (name(), inner.clone(), inner.clone())
            .prop_map(|(n, lo, hi)| Binder::var(n).with_range(lo, hi)),
        (name(), inner.clone(), inner.clone(), inner)
            .prop_map(|(n, lo, hi, c)| Binder::var(n).with_range(lo, hi).with_condition(c)),
    ]
}

fn formula() -> impl Strategy<Value = Formula> {
    leaf().prop_recursive(5, 48, 4, |inner| {
        let list = prop::collection::vec(inner.clone(), 0..4);
        let two = prop::collection::vec(inner.clone(), 2..4);
        prop_oneof![
            (prop::sample::select(HEADS), list.clone()).prop_map(|(h, args)| Formula::app(h, args)),
            (name(), inner.clone()).prop_map(|(b, i)| Formula::index(Formula::var(b), i)),
            list.clone().prop_map(Formula::Set),
            list.prop_map(Formula::Tuple),
            inner.clone().prop_map(Formula::length),
            inner.clone().prop_map(Formula::not),
            two.clone().prop_map(Formula::and),
            two.prop_map(Formula::or),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::implies(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::iff(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::def_iff(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::def_eq(a, b)),
            (rel(), inner.clone(), inner.clone()).prop_map(|(op, a, b)| Formula::rel(op, a, b)),
            (
                prop::sample::select(&["plus", "minus", "times", "divide", "power"][..]),
                inner.clone(),
                inner.clone()
            )
                .prop_map(|(op, a, b)| Formula::app(op, vec![a, b])),
            (binder(inner.clone()), inner.clone()).prop_map(|(b, body)| Formula::forall(b, body)),
            (binder(inner.clone()), inner).prop_map(|(b, body)| Formula::exists(b, body)),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn print_then_parse_is_identity(f in formula()) {
        for style in [Style::Ascii, Style::Unicode] {
            let printed = format(&f, style);
            let back = parse_formula(&printed);
            prop_assert_eq!(back.as_ref(), Ok(&f), "{}", printed);
        }
    }

    #[test]
    fn printing_is_stable(f in formula()) {
        let once = format(&f, Style::Unicode);
        let twice = format(&parse_formula(&once).unwrap(), Style::Unicode);
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn alpha_equality_survives_bound_renaming(body in formula()) {
        let f = Formula::forall(Binder::var("x"), body.clone());
        let map = BTreeMap::from([("x".to_string(), Formula::var("fresh_x"))]);
        let g = Formula::forall(Binder::var("fresh_x"), substitute(&body, &map));
        prop_assert!(alpha_equal(&f, &g));
        prop_assert!(alpha_equal(&f, &f));
    }
}

fn status() -> impl Strategy<Value = Status> {
    prop::sample::select(vec![
        Status::Pending,
        Status::Proved,
        Status::Failed,
        Status::Pruned,
    ])
}

proptest! {
    #[test]
    fn folds_ignore_child_order(mut kids in prop::collection::vec(status(), 0..6), seed in any::<u64>()) {
        let and = fold_and(&kids);
        let or = fold_or(&kids);
        let n = kids.len().max(1);
        kids.rotate_left(seed as usize % n);
        kids.reverse();
        prop_assert_eq!(fold_and(&kids), and);
        prop_assert_eq!(fold_or(&kids), or);
    }

    #[test]
    fn folds_match_their_definitions(kids in prop::collection::vec(status(), 0..6)) {
        let all_proved = !kids.is_empty() && kids.iter().all(|s| *s == Status::Proved);
        prop_assert_eq!(fold_and(&kids) == Status::Proved, all_proved);
        prop_assert_eq!(fold_and(&kids) == Status::Failed, kids.contains(&Status::Failed));
        prop_assert_eq!(fold_or(&kids) == Status::Proved, kids.contains(&Status::Proved));
        let dead = !kids.is_empty() && kids.iter().all(|s| matches!(s, Status::Failed | Status::Pruned));
        prop_assert_eq!(fold_or(&kids) == Status::Failed, dead);
    }
}

fn proposition() -> impl Strategy<Value = Formula> {
    let atom = prop::sample::select(&["p", "q", "r"][..]).prop_map(Formula::var);
    atom.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(vec![a, b])),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(vec![a, b])),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::implies(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| Formula::iff(a, b)),
        ]
    })
}

fn entry(n: u64, formula: Formula) -> FormulaEntry {
    FormulaEntry {
        key: FormulaKey::new("/props.tnb", CellId(n)),
        label: n.to_string(),
        source_text: format(&formula, Style::Ascii),
        formula,
    }
}

fn run(
    goal: Formula,
    kb: Vec<Formula>,
    tweak: impl FnOnce(&mut SettingsSnapshot),
) -> (ProofTree, Vec<ProofEvent>) {
    let goal = entry(100, goal);
    let kb: Vec<FormulaEntry> = kb
        .into_iter()
        .enumerate()
        .map(|(i, f)| entry(i as u64 + 1, f))
        .collect();
    let mut snap = SettingsSnapshot::new(goal.key.clone());
    snap.knowledge = kb.iter().map(|e| e.key.clone()).collect();
    snap.limits.max_nodes = 400;
    tweak(&mut snap);
    let mut events = Vec::new();
    let tree = prove(&goal, &kb, &snap, &mut |e| events.push(e.clone()), None).unwrap();
    (tree, events)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn replay_rebuilds_the_tree(goal in proposition(), kb in prop::collection::vec(proposition(), 0..3)) {
        let (tree, events) = run(goal, kb, |_| {});
        prop_assert_eq!(events.first().map(|e| e.seq), Some(1));
        prop_assert!(events.windows(2).all(|w| w[1].seq == w[0].seq + 1));
        let replayed = ProofTree::replay(&events).unwrap();
        prop_assert_eq!(replayed.canonical_json(), tree.canonical_json());
        prop_assert!(tree.check_status_algebra().is_ok(), "{:?}", tree.check_status_algebra());
    }

    #[test]
    fn prefixes_replay_to_partial_trees(goal in proposition(), cut in 0usize..50) {
        let (_, events) = run(goal, vec![], |_| {});
        let cut = cut.min(events.len());
        let partial = ProofTree::replay(&events[..cut]).unwrap();
        prop_assert_eq!(partial.last_seq, cut as u64);
    }

    #[test]
    fn navigation_is_bijective(
        goal in proposition(),
        kb in prop::collection::vec(proposition(), 0..3),
        hide in prop::sample::subsequence(vec!["impl-goal-direct", "and-goal-split", "goal-in-kb", "modus-ponens", "or-kb-split"], 0..3),
    ) {
        let (tree, _) = run(goal, kb, |s| {
            for r in &hide {
                s.rule_states.get_mut(*r).unwrap().explain = false;
            }
        });
        let rendered = render_proof(&tree, &Catalogs::english_only(), "en");
        prop_assert!(rendered.navigation.is_bijective());
        for (i, block) in rendered.document.blocks.iter().enumerate() {
            prop_assert_eq!(rendered.navigation.node_for_block(i), Ok(block.node_id));
            let rule = tree.node(block.node_id).unwrap().rule_id.as_deref();
            prop_assert!(rule.is_none_or(|r| !hide.contains(&r)));
        }
    }
}
