//! The generic proof search. Every change to the tree goes through an
//! event, so the emitted stream always replays to the returned tree.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use super::builtins::{resolve_builtins, ActiveBuiltins};
use super::config::{RuleState, SettingsSnapshot, StrategyId};
use super::rules::{applicable_rules, Assumption, RuleApplication, Situation};
use super::tree::{
    EventKind, FailReason, NodeId, NodePayload, NodeType, ProofEvent, ProofTree, Status,
};
use super::ProverError;
use crate::formula::constify_free;
use crate::session::FormulaEntry;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Abort {
    Limit,
    Timeout,
    Cancelled,
}

impl From<Abort> for FailReason {
    fn from(a: Abort) -> Self {
        match a {
            Abort::Limit => FailReason::Limit,
            Abort::Timeout => FailReason::Timeout,
            Abort::Cancelled => FailReason::Cancelled,
        }
    }
}

struct Search<'a> {
    tree: ProofTree,
    sink: &'a mut dyn FnMut(&ProofEvent),
    states: &'a BTreeMap<String, RuleState>,
    builtins: ActiveBuiltins,
    strategy: StrategyId,
    max_nodes: usize,
    max_depth: usize,
    branch_width: usize,
    deadline: Instant,
    cancel: Option<&'a AtomicBool>,
    pending_apps: HashMap<NodeId, Vec<RuleApplication>>,
}

/// The initial situation: the goal and the knowledge with free variables
/// read as constants. The goal's own entry is left out of the knowledge.
pub fn initial_situation(goal: &FormulaEntry, knowledge: &[FormulaEntry]) -> Situation {
    let mut assumptions: Vec<Assumption> = Vec::new();
    for entry in knowledge.iter().filter(|e| e.key != goal.key) {
        let mut label = entry.label.clone();
        while assumptions.iter().any(|a| a.label == label) {
            label.push('\'');
        }
        assumptions.push(Assumption {
            label,
            formula: constify_free(&entry.formula),
            key: Some(entry.key.clone()),
        });
    }
    Situation::new(constify_free(&goal.formula), assumptions)
}

/// Runs the configured strategy. The tree is returned for failed proofs
/// too; an error means the configuration itself is invalid.
pub fn prove(
    goal: &FormulaEntry,
    knowledge: &[FormulaEntry],
    snapshot: &SettingsSnapshot,
    sink: &mut dyn FnMut(&ProofEvent),
    cancel: Option<&AtomicBool>,
) -> Result<ProofTree, ProverError> {
    snapshot.validate()?;
    let builtins = resolve_builtins(&snapshot.builtins)?;
    let timeout = Duration::from_secs_f64(snapshot.limits.timeout.min(1.0e6));
    let mut search = Search {
        tree: ProofTree::new(),
        sink,
        states: &snapshot.rule_states,
        builtins,
        strategy: snapshot.strategy,
        max_nodes: snapshot.limits.max_nodes.max(1),
        max_depth: snapshot.limits.max_depth,
        branch_width: snapshot.limits.branch_width,
        deadline: Instant::now() + timeout,
        cancel,
        pending_apps: HashMap::new(),
    };
    let root = search
        .add_situation(None, initial_situation(goal, knowledge), NodeType::Initial)
        .expect("the root always fits");
    let outcome = search.solve(root);
    if let Err(abort) = outcome {
        search.abort_pending(abort.into());
    }
    let status = search.tree.status();
    let reason = search.tree.root().and_then(|r| r.reason);
    search.emit(ProofEvent {
        kind: EventKind::Finished,
        status: Some(status),
        reason,
        ..event(root)
    });
    Ok(search.tree)
}

fn event(node_id: NodeId) -> ProofEvent {
    ProofEvent {
        seq: 0,
        kind: EventKind::StatusChanged,
        node_id,
        parent_id: None,
        node_type: None,
        status: None,
        rule_id: None,
        explain: None,
        payload: None,
        reason: None,
    }
}

impl Search<'_> {
    fn emit(&mut self, mut e: ProofEvent) {
        e.seq = self.tree.last_seq + 1;
        self.tree
            .apply(&e)
            .expect("search emits well-formed events");
        (self.sink)(&e);
    }

    fn check(&self) -> Result<(), Abort> {
        if self.cancel.is_some_and(|c| c.load(Ordering::Relaxed)) {
            return Err(Abort::Cancelled);
        }
        if Instant::now() >= self.deadline {
            return Err(Abort::Timeout);
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn add_node(
        &mut self,
        parent: Option<NodeId>,
        node_type: NodeType,
        status: Status,
        rule_id: Option<&str>,
        explain: bool,
        payload: NodePayload,
    ) -> Result<NodeId, Abort> {
        if self.tree.len() >= self.max_nodes {
            return Err(Abort::Limit);
        }
        let id = self.tree.len();
        self.emit(ProofEvent {
            kind: EventKind::NodeAdded,
            parent_id: parent,
            node_type: Some(node_type),
            status: Some(status),
            rule_id: rule_id.map(str::to_string),
            explain: Some(explain),
            payload: Some(payload),
            ..event(id)
        });
        Ok(id)
    }

    fn set_status(&mut self, id: NodeId, status: Status, reason: Option<FailReason>) {
        let node = &self.tree.nodes[id];
        if node.status == status && node.reason == reason {
            return;
        }
        self.emit(ProofEvent {
            status: Some(status),
            reason,
            ..event(id)
        });
    }

    fn is_loop(&self, parent: Option<NodeId>, s: &Situation) -> bool {
        let Some(parent) = parent else { return false };
        std::iter::once(parent)
            .chain(self.tree.ancestors(parent))
            .filter_map(|a| self.tree.nodes[a].situation())
            .any(|anc| s.subsumed_by(anc))
    }

    /// Adds a situation node together with its applicable rules. Loops
    /// and depth exhaustion are decided here and recorded on expansion.
    fn add_situation(
        &mut self,
        parent: Option<NodeId>,
        situation: Situation,
        node_type: NodeType,
    ) -> Result<NodeId, Abort> {
        let looped = self.is_loop(parent, &situation);
        let mut apps = if looped {
            Vec::new()
        } else {
            applicable_rules(&situation, self.states, &self.builtins)
        };
        if situation.depth >= self.max_depth {
            apps.retain(|a| a.produced.is_empty());
        }
        let mut candidates: Vec<String> = Vec::new();
        for a in &apps {
            if candidates.last().map(String::as_str) != Some(a.rule_id) {
                candidates.push(a.rule_id.to_string());
            }
        }
        let depth_cut = situation.depth >= self.max_depth;
        let id = self.add_node(
            parent,
            node_type,
            Status::Pending,
            None,
            node_type == NodeType::Initial,
            NodePayload::Situation {
                situation,
                candidates,
            },
        )?;
        if looped {
            self.set_status(id, Status::Failed, Some(FailReason::Loop));
        } else if apps.is_empty() {
            let reason = if depth_cut {
                FailReason::Depth
            } else {
                FailReason::NoRules
            };
            self.set_status(id, Status::Failed, Some(reason));
        } else {
            self.pending_apps.insert(id, apps);
        }
        Ok(id)
    }

    fn solve(&mut self, id: NodeId) -> Result<bool, Abort> {
        let Some(apps) = self.pending_apps.remove(&id) else {
            // Decided on creation.
            return Ok(self.tree.nodes[id].status == Status::Proved);
        };
        let proved = match self.strategy {
            StrategyId::ApplyFirst => self.apply_first(id, apps)?,
            StrategyId::BranchAlternatives if apps.len() == 1 => self.apply_first(id, apps)?,
            StrategyId::BranchAlternatives => self.branch(id, apps)?,
        };
        if proved {
            self.set_status(id, Status::Proved, None);
        } else {
            self.set_status(id, Status::Failed, Some(FailReason::Exhausted));
        }
        Ok(proved)
    }

    fn application_node(&mut self, parent: NodeId, app: &RuleApplication) -> Result<NodeId, Abort> {
        let explain = self.states.get(app.rule_id).is_none_or(|s| s.explain);
        self.add_node(
            Some(parent),
            NodeType::And,
            Status::Pending,
            Some(app.rule_id),
            explain,
            NodePayload::Application {
                explanation: app.explanation.clone(),
            },
        )
    }

    fn apply_first(&mut self, id: NodeId, apps: Vec<RuleApplication>) -> Result<bool, Abort> {
        for app in apps {
            self.check()?;
            let and = self.application_node(id, &app)?;
            if self.expand(and, app)? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    fn branch(&mut self, id: NodeId, mut apps: Vec<RuleApplication>) -> Result<bool, Abort> {
        self.check()?;
        apps.truncate(self.branch_width);
        let or = self.add_node(
            Some(id),
            NodeType::Or,
            Status::Pending,
            None,
            false,
            NodePayload::Alternatives,
        )?;
        let mut ands = Vec::with_capacity(apps.len());
        for app in &apps {
            ands.push(self.application_node(or, app)?);
        }
        for (i, app) in apps.into_iter().enumerate() {
            self.check()?;
            if self.expand(ands[i], app)? {
                for &rest in &ands[i + 1..] {
                    self.set_status(rest, Status::Pruned, None);
                }
                self.set_status(or, Status::Proved, None);
                return Ok(true);
            }
        }
        self.set_status(or, Status::Failed, None);
        Ok(false)
    }

    /// Builds and searches the children of an application node.
    fn expand(&mut self, and: NodeId, app: RuleApplication) -> Result<bool, Abort> {
        if app.produced.is_empty() {
            self.add_node(
                Some(and),
                NodeType::Terminal,
                Status::Proved,
                None,
                false,
                NodePayload::Discharged,
            )?;
            self.set_status(and, Status::Proved, None);
            return Ok(true);
        }
        let mut kids = Vec::with_capacity(app.produced.len());
        for s in app.produced {
            kids.push(self.add_situation(Some(and), s, NodeType::Situation)?);
        }
        for (i, &kid) in kids.iter().enumerate() {
            if !self.solve(kid)? {
                self.set_status(and, Status::Failed, None);
                for &rest in &kids[i + 1..] {
                    self.pending_apps.remove(&rest);
                    if self.tree.nodes[rest].status == Status::Pending {
                        self.set_status(rest, Status::Pruned, None);
                    }
                }
                return Ok(false);
            }
        }
        self.set_status(and, Status::Proved, None);
        Ok(true)
    }

    /// Fails every open node, deepest first, after the search stopped.
    fn abort_pending(&mut self, reason: FailReason) {
        self.pending_apps.clear();
        for id in (0..self.tree.len()).rev() {
            if self.tree.nodes[id].status == Status::Pending {
                self.set_status(id, Status::Failed, Some(reason));
            }
        }
    }
}
