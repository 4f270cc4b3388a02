//! Natural-deduction proof search over proof situations, driven by a
//! nested rule list with per-rule activation, priority and explanation
//! flags. Also hosts built-in simplification and the compute activity.

mod builtins;
mod compute;
mod config;
mod rules;
mod search;
mod tree;

use thiserror::Error;

pub use builtins::{
    builtin_simplify, group_members, is_literal, literal_eq, resolve_builtins, simplify_noted,
    ActiveBuiltins, BuiltinInfo, SimplifyNote, BUILTINS, GROUPS as BUILTIN_GROUPS,
};
pub use compute::{compute, ComputeError, ComputeResult, TraceStep, DEFAULT_MAX_STEPS};
pub use config::{
    default_rule_states, validate_rule_states, Limits, ProveConfiguration, RuleState,
    SettingsSnapshot, StrategyId, MAX_PRIORITY, MIN_PRIORITY,
};
pub use rules::{
    applicable_rules, negate, ordered_rules, rule_info, Assumption, Explanation, LabelRef,
    RuleApplication, RuleInfo, Situation, RULES,
};
pub use search::{initial_situation, prove};
pub use tree::{
    fold_and, fold_or, EventKind, FailReason, NodeId, NodePayload, NodeType, ProofEvent, ProofNode,
    ProofTree, ReplayError, Status,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProverError {
    #[error("invalid settings: {0}")]
    InvalidSnapshot(String),
    #[error("unknown strategy {0:?}")]
    UnknownStrategy(String),
    #[error("unknown rule {0:?}")]
    UnknownRule(String),
    #[error("unknown built-in {0:?}")]
    UnknownBuiltin(String),
    #[error("priority {priority} of rule {rule} is outside 1..100")]
    PriorityOutOfRange { rule: String, priority: u32 },
    #[error("no goal has been confirmed")]
    NoGoal,
}
