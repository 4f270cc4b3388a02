use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::builtins::resolve_builtins;
use super::rules::{rule_info, RULES};
use super::ProverError;
use crate::session::FormulaKey;

pub const MIN_PRIORITY: u32 = 1;
pub const MAX_PRIORITY: u32 = 100;

#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
pub enum StrategyId {
    #[default]
    #[serde(rename = "apply-first")]
    ApplyFirst,
    #[serde(rename = "branch-alternatives")]
    BranchAlternatives,
}

impl StrategyId {
    pub const ALL: [StrategyId; 2] = [StrategyId::ApplyFirst, StrategyId::BranchAlternatives];

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyId::ApplyFirst => "apply-first",
            StrategyId::BranchAlternatives => "branch-alternatives",
        }
    }
}

impl fmt::Display for StrategyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyId {
    type Err = ProverError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StrategyId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| ProverError::UnknownStrategy(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleState {
    pub rule_id: String,
    pub active: bool,
    /// Smaller is tried earlier.
    pub priority: u32,
    pub explain: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Limits {
    pub max_depth: usize,
    pub max_nodes: usize,
    /// Seconds.
    pub timeout: f64,
    /// Maximum number of alternatives under one or-node.
    #[serde(default = "default_branch_width")]
    pub branch_width: usize,
}

fn default_branch_width() -> usize {
    4
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_depth: 40,
            max_nodes: 4000,
            timeout: 10.0,
            branch_width: default_branch_width(),
        }
    }
}

/// Rule states of the whole rule list with their defaults.
pub fn default_rule_states() -> BTreeMap<String, RuleState> {
    RULES
        .iter()
        .map(|r| {
            (
                r.id.to_string(),
                RuleState {
                    rule_id: r.id.to_string(),
                    active: true,
                    priority: r.default_priority,
                    explain: r.default_explain,
                },
            )
        })
        .collect()
}

/// Everything needed to rerun a proof.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingsSnapshot {
    pub goal_key: FormulaKey,
    pub knowledge: BTreeSet<FormulaKey>,
    pub builtins: BTreeSet<String>,
    pub rule_states: BTreeMap<String, RuleState>,
    pub strategy: StrategyId,
    pub limits: Limits,
    pub language: String,
}

impl SettingsSnapshot {
    pub fn new(goal_key: FormulaKey) -> Self {
        SettingsSnapshot {
            goal_key,
            knowledge: BTreeSet::new(),
            builtins: BTreeSet::new(),
            rule_states: default_rule_states(),
            strategy: StrategyId::default(),
            limits: Limits::default(),
            language: "en".to_string(),
        }
    }

    /// Checks that every id resolves and every priority is in range.
    pub fn validate(&self) -> Result<(), ProverError> {
        validate_rule_states(&self.rule_states)?;
        resolve_builtins(&self.builtins)?;
        if self.limits.branch_width == 0 {
            return Err(ProverError::InvalidSnapshot(
                "branch_width must be positive".into(),
            ));
        }
        if self.limits.timeout.is_nan() || self.limits.timeout <= 0.0 {
            return Err(ProverError::InvalidSnapshot(
                "timeout must be positive".into(),
            ));
        }
        Ok(())
    }

    /// The configuration this snapshot was taken from.
    pub fn restore(&self) -> Result<ProveConfiguration, ProverError> {
        self.validate()?;
        Ok(ProveConfiguration {
            goal: Some(self.goal_key.clone()),
            knowledge: self.knowledge.clone(),
            builtins: self.builtins.clone(),
            rule_states: self.rule_states.clone(),
            strategy: self.strategy,
            limits: self.limits.clone(),
            language: self.language.clone(),
        })
    }
}

/// Rule states must name known rules, with priorities in 1..=100. A map
/// may omit rules; those keep their defaults.
pub fn validate_rule_states(states: &BTreeMap<String, RuleState>) -> Result<(), ProverError> {
    for (id, state) in states {
        if rule_info(id).is_none() {
            return Err(ProverError::UnknownRule(id.clone()));
        }
        if state.rule_id != *id {
            return Err(ProverError::InvalidSnapshot(format!(
                "rule state for {id} is labelled {}",
                state.rule_id
            )));
        }
        if !(MIN_PRIORITY..=MAX_PRIORITY).contains(&state.priority) {
            return Err(ProverError::PriorityOutOfRange {
                rule: id.clone(),
                priority: state.priority,
            });
        }
    }
    Ok(())
}

/// The interactive prove settings; the goal may still be unset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProveConfiguration {
    pub goal: Option<FormulaKey>,
    pub knowledge: BTreeSet<FormulaKey>,
    pub builtins: BTreeSet<String>,
    pub rule_states: BTreeMap<String, RuleState>,
    pub strategy: StrategyId,
    pub limits: Limits,
    pub language: String,
}

impl Default for ProveConfiguration {
    fn default() -> Self {
        ProveConfiguration {
            goal: None,
            knowledge: BTreeSet::new(),
            builtins: BTreeSet::new(),
            rule_states: default_rule_states(),
            strategy: StrategyId::default(),
            limits: Limits::default(),
            language: "en".to_string(),
        }
    }
}

impl ProveConfiguration {
    pub fn snapshot(&self) -> Result<SettingsSnapshot, ProverError> {
        let goal_key = self.goal.clone().ok_or(ProverError::NoGoal)?;
        let mut rule_states = default_rule_states();
        rule_states.extend(self.rule_states.clone());
        let snap = SettingsSnapshot {
            goal_key,
            knowledge: self.knowledge.clone(),
            builtins: self.builtins.clone(),
            rule_states,
            strategy: self.strategy,
            limits: self.limits.clone(),
            language: self.language.clone(),
        };
        snap.validate()?;
        Ok(snap)
    }
}
