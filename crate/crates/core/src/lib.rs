//! Core of the workbench: formula language, documents, session
//! elaboration, the natural-deduction prover, proof presentation and
//! language catalogs.

pub mod document;
pub mod formula;
pub mod i18n;
pub mod messages;
pub mod presenter;
pub mod prover;
pub mod session;

pub use formula::{Binder, Declaration, Formula, RelOp};
