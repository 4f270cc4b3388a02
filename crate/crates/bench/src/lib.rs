//! Shared inputs for the benchmarks in `benches/`.

use tma_core::document::{document_from_json, CellId, Document};
use tma_core::formula::parse_formula;
use tma_core::session::{FormulaEntry, FormulaKey};

pub const AUCTION: &str = include_str!("../../../samples/auction.tnb");

pub const FORMULAS: &[&str] = &[
    "bids[b] :<=> forall[j = 1..|b|, b_j >= 0]",
    "forall[winner = 1..n with x_winner = 1, secondPriceAuctionWinner[b, x, p, winner]]",
    "forall[x, forall[y, parent[x, y] => ancestor[x, y]]]",
    "(p => q) and (q => r) => (p => r)",
    "a * (b + c) ^ 2 - |v| / rat[3, 4] <= {1, 2, 3}",
    "∀ x, y : r[x, y] ⇒ r[y, x] ∨ ¬ s[⟨x, y⟩]",
];

pub fn auction() -> Document {
    document_from_json(AUCTION, "/bench/auction.tnb".as_ref()).expect("sample document is valid")
}

pub fn entry(n: u64, text: &str) -> FormulaEntry {
    FormulaEntry {
        key: FormulaKey::new("/bench/kb.tnb", CellId(n)),
        label: n.to_string(),
        formula: parse_formula(text).expect("bench formulas parse"),
        source_text: text.to_string(),
    }
}

/// A chain `p0[a]`, `p_i[x] => p_{i+1}[x]` whose goal needs `len` steps.
pub fn chain(len: usize) -> (FormulaEntry, Vec<FormulaEntry>) {
    let mut kb = vec![entry(1, "p0[a]")];
    for i in 0..len {
        kb.push(entry(
            i as u64 + 2,
            &format!("forall[x, p{i}[x] => p{}[x]]", i + 1),
        ));
    }
    (entry(1000, &format!("p{len}[a]")), kb)
}
