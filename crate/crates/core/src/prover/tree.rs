use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::rules::{Explanation, Situation};

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeType {
    Initial,
    Situation,
    And,
    Or,
    Terminal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pending,
    Proved,
    Failed,
    Pruned,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailReason {
    /// No active rule applies.
    NoRules,
    /// Every alternative failed.
    Exhausted,
    /// The situation repeats one on its branch.
    Loop,
    Depth,
    /// Node limit.
    Limit,
    Timeout,
    Cancelled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NodePayload {
    Situation {
        situation: Situation,
        /// Ids of the applicable rules, in trial order.
        candidates: Vec<String>,
    },
    Application {
        explanation: Explanation,
    },
    Alternatives,
    Discharged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProofNode {
    pub id: NodeId,
    pub node_type: NodeType,
    pub status: Status,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rule_id: Option<String>,
    pub explain: bool,
    pub payload: NodePayload,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<FailReason>,
}

impl ProofNode {
    pub fn situation(&self) -> Option<&Situation> {
        match &self.payload {
            NodePayload::Situation { situation, .. } => Some(situation),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    NodeAdded,
    StatusChanged,
    Finished,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProofEvent {
    pub seq: u64,
    pub kind: EventKind,
    pub node_id: NodeId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_id: Option<NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_type: Option<NodeType>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<Status>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explain: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<NodePayload>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<FailReason>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("event {seq}: expected sequence number {expected}")]
    OutOfOrder { seq: u64, expected: u64 },
    #[error("event {seq}: node {node} is unknown")]
    UnknownNode { seq: u64, node: NodeId },
    #[error("event {seq}: node ids must be dense, expected {expected}")]
    BadNodeId { seq: u64, expected: NodeId },
    #[error("event {seq}: missing field {field}")]
    Missing { seq: u64, field: &'static str },
    #[error("event {seq} follows the finished event")]
    AfterFinish { seq: u64 },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ProofTree {
    pub nodes: Vec<ProofNode>,
    pub finished: bool,
    /// Number of events applied.
    pub last_seq: u64,
}

impl ProofTree {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn root(&self) -> Option<&ProofNode> {
        self.nodes.first()
    }

    pub fn node(&self, id: NodeId) -> Option<&ProofNode> {
        self.nodes.get(id)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn proved(&self) -> bool {
        self.root().is_some_and(|r| r.status == Status::Proved)
    }

    pub fn status(&self) -> Status {
        self.root().map_or(Status::Pending, |r| r.status)
    }

    /// Rebuilds a tree from its complete event list.
    pub fn replay(events: &[ProofEvent]) -> Result<ProofTree, ReplayError> {
        let mut tree = ProofTree::new();
        for e in events {
            tree.apply(e)?;
        }
        Ok(tree)
    }

    pub fn apply(&mut self, e: &ProofEvent) -> Result<(), ReplayError> {
        let seq = e.seq;
        if self.finished {
            return Err(ReplayError::AfterFinish { seq });
        }
        if seq != self.last_seq + 1 {
            return Err(ReplayError::OutOfOrder {
                seq,
                expected: self.last_seq + 1,
            });
        }
        match e.kind {
            EventKind::NodeAdded => {
                if e.node_id != self.nodes.len() {
                    return Err(ReplayError::BadNodeId {
                        seq,
                        expected: self.nodes.len(),
                    });
                }
                if let Some(p) = e.parent_id {
                    let parent = self
                        .nodes
                        .get_mut(p)
                        .ok_or(ReplayError::UnknownNode { seq, node: p })?;
                    parent.children.push(e.node_id);
                }
                self.nodes.push(ProofNode {
                    id: e.node_id,
                    node_type: e.node_type.ok_or(ReplayError::Missing {
                        seq,
                        field: "node_type",
                    })?,
                    status: e.status.ok_or(ReplayError::Missing {
                        seq,
                        field: "status",
                    })?,
                    parent: e.parent_id,
                    children: Vec::new(),
                    rule_id: e.rule_id.clone(),
                    explain: e.explain.unwrap_or(false),
                    payload: e.payload.clone().ok_or(ReplayError::Missing {
                        seq,
                        field: "payload",
                    })?,
                    reason: e.reason,
                });
            }
            EventKind::StatusChanged => {
                let node = self
                    .nodes
                    .get_mut(e.node_id)
                    .ok_or(ReplayError::UnknownNode {
                        seq,
                        node: e.node_id,
                    })?;
                node.status = e.status.ok_or(ReplayError::Missing {
                    seq,
                    field: "status",
                })?;
                node.reason = e.reason;
            }
            EventKind::Finished => {
                if e.node_id >= self.nodes.len() {
                    return Err(ReplayError::UnknownNode {
                        seq,
                        node: e.node_id,
                    });
                }
                self.finished = true;
            }
        }
        self.last_seq = seq;
        Ok(())
    }

    /// Canonical serialization used for comparisons.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("tree serialization is infallible")
    }

    /// Ids of the applied rules in node order.
    pub fn applied_rules(&self) -> Vec<&str> {
        self.nodes
            .iter()
            .filter(|n| n.node_type == NodeType::And)
            .filter_map(|n| n.rule_id.as_deref())
            .collect()
    }

    /// Ancestors of `id`, nearest first.
    pub fn ancestors(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut cur = self.nodes.get(id).and_then(|n| n.parent);
        while let Some(p) = cur {
            out.push(p);
            cur = self.nodes[p].parent;
        }
        out
    }

    pub fn max_situation_depth(&self) -> usize {
        self.nodes
            .iter()
            .filter_map(|n| n.situation().map(|s| s.depth))
            .max()
            .unwrap_or(0)
    }

    /// The deepest failed situation, preferring later nodes on ties.
    pub fn deepest_failure(&self) -> Option<&ProofNode> {
        self.nodes
            .iter()
            .filter(|n| n.status == Status::Failed && n.situation().is_some())
            .max_by_key(|n| (n.situation().map_or(0, |s| s.depth), n.id))
    }

    /// Checks every and/or node against the fold of its children and every
    /// situation against its alternatives.
    pub fn check_status_algebra(&self) -> Result<(), String> {
        for n in &self.nodes {
            let kids: Vec<Status> = n.children.iter().map(|c| self.nodes[*c].status).collect();
            let any = |s: Status| kids.contains(&s);
            let ok = match n.node_type {
                // An empty node was pruned or cut off by an aborted search.
                NodeType::And | NodeType::Or if kids.is_empty() => n.status != Status::Proved,
                NodeType::And => fold_and(&kids) == n.status,
                NodeType::Or => fold_or(&kids) == n.status,
                NodeType::Initial | NodeType::Situation => match n.status {
                    Status::Proved => any(Status::Proved),
                    Status::Failed => !any(Status::Proved) && !any(Status::Pending),
                    Status::Pruned => kids.is_empty(),
                    Status::Pending => !any(Status::Proved),
                },
                NodeType::Terminal => n.status == Status::Proved,
            };
            if !ok {
                return Err(format!(
                    "node {} ({:?}) is {:?} with children {:?}",
                    n.id, n.node_type, n.status, kids
                ));
            }
        }
        Ok(())
    }
}

/// Proved iff all children proved, failed iff one failed.
pub fn fold_and(kids: &[Status]) -> Status {
    if kids.contains(&Status::Failed) {
        Status::Failed
    } else if !kids.is_empty() && kids.iter().all(|s| *s == Status::Proved) {
        Status::Proved
    } else {
        Status::Pending
    }
}

/// Proved iff one child proved, failed iff all failed or pruned.
pub fn fold_or(kids: &[Status]) -> Status {
    if kids.contains(&Status::Proved) {
        Status::Proved
    } else if !kids.is_empty()
        && kids
            .iter()
            .all(|s| matches!(s, Status::Failed | Status::Pruned))
    {
        Status::Failed
    } else {
        Status::Pending
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Status::*;

    #[test]
    fn folds_exhaustive_over_small_families() {
        let all = [Pending, Proved, Failed, Pruned];
        for n in 1..=3 {
            let mut idx = vec![0usize; n];
            loop {
                let kids: Vec<Status> = idx.iter().map(|i| all[*i]).collect();
                let and = fold_and(&kids);
                assert_eq!(and == Proved, kids.iter().all(|s| *s == Proved));
                assert_eq!(and == Failed, kids.contains(&Failed));
                let or = fold_or(&kids);
                assert_eq!(or == Proved, kids.contains(&Proved));
                assert_eq!(
                    or == Failed,
                    kids.iter().all(|s| matches!(s, Failed | Pruned))
                );
                let mut k = 0;
                while k < n {
                    idx[k] += 1;
                    if idx[k] < all.len() {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
                if k == n {
                    break;
                }
            }
        }
    }

    #[test]
    fn replay_rejects_gaps() {
        let e = ProofEvent {
            seq: 2,
            kind: EventKind::Finished,
            node_id: 0,
            parent_id: None,
            node_type: None,
            status: None,
            rule_id: None,
            explain: None,
            payload: None,
            reason: None,
        };
        assert!(matches!(
            ProofTree::replay(&[e]),
            Err(ReplayError::OutOfOrder { expected: 1, .. })
        ));
    }
}
