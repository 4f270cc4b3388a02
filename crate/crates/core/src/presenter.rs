//! Natural-language rendering of proof trees, the node/block navigation
//! map, and the proof record written back into documents.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::document::{CellId, CellKind, Document, DocumentError, Node};
use crate::i18n::Catalogs;
use crate::prover::{LabelRef, NodeId, NodePayload, NodeType, ProofTree, SettingsSnapshot, Status};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProofResultRecord {
    pub proof_id: String,
    pub success: bool,
    pub snapshot: SettingsSnapshot,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub summary: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextBlock {
    pub block_id: usize,
    pub node_id: NodeId,
    pub text: String,
    pub formula_label_refs: Vec<LabelRef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProofDocument {
    pub language: String,
    pub success: bool,
    pub blocks: Vec<TextBlock>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct NavigationMap {
    pub node_to_blocks: BTreeMap<NodeId, Vec<usize>>,
    pub block_to_node: BTreeMap<usize, NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NavigationError {
    #[error("node {0} has no text blocks")]
    UnknownNode(NodeId),
    #[error("there is no block {0}")]
    UnknownBlock(usize),
}

impl NavigationMap {
    pub fn blocks_for_node(&self, node: NodeId) -> Result<&[usize], NavigationError> {
        self.node_to_blocks
            .get(&node)
            .map(Vec::as_slice)
            .ok_or(NavigationError::UnknownNode(node))
    }

    pub fn node_for_block(&self, block: usize) -> Result<NodeId, NavigationError> {
        self.block_to_node
            .get(&block)
            .copied()
            .ok_or(NavigationError::UnknownBlock(block))
    }

    /// The two maps are mutually inverse and node lists are nonempty.
    pub fn is_bijective(&self) -> bool {
        let forward: usize = self.node_to_blocks.values().map(Vec::len).sum();
        forward == self.block_to_node.len()
            && self.node_to_blocks.iter().all(|(n, bs)| {
                !bs.is_empty() && bs.iter().all(|b| self.block_to_node.get(b) == Some(n))
            })
    }
}

/// A rendered proof and the names of templates that had to fall back to
/// English.
#[derive(Debug, Clone, PartialEq)]
pub struct Rendered {
    pub document: ProofDocument,
    pub navigation: NavigationMap,
    pub fallbacks: Vec<String>,
}

struct Renderer<'a> {
    tree: &'a ProofTree,
    catalogs: &'a Catalogs,
    language: &'a str,
    blocks: Vec<TextBlock>,
    nav: NavigationMap,
    fallbacks: Vec<String>,
}

impl Renderer<'_> {
    fn template(&mut self, name: &str) -> String {
        if !self.catalogs.has_own_template(name, self.language)
            && !self.fallbacks.iter().any(|f| f == name)
        {
            self.fallbacks.push(name.to_string());
        }
        self.catalogs
            .template(name, self.language)
            .unwrap_or_default()
            .to_string()
    }

    fn push(&mut self, node: NodeId, text: String, refs: Vec<LabelRef>) {
        let block_id = self.blocks.len();
        self.nav
            .node_to_blocks
            .entry(node)
            .or_default()
            .push(block_id);
        self.nav.block_to_node.insert(block_id, node);
        self.blocks.push(TextBlock {
            block_id,
            node_id: node,
            text,
            formula_label_refs: refs.into_iter().filter(|r| r.key.is_some()).collect(),
        });
    }

    fn initial(&mut self, id: NodeId) {
        let Some(s) = self.tree.nodes[id].situation() else {
            return;
        };
        let refs: Vec<LabelRef> = s
            .assumptions
            .iter()
            .map(|a| LabelRef {
                label: a.label.clone(),
                key: a.key.clone(),
            })
            .collect();
        let knowledge = if refs.is_empty() {
            self.catalogs
                .tr("presenter.no_knowledge", self.language, &[])
        } else {
            self.catalogs.tr(
                "presenter.knowledge",
                self.language,
                &[("refs", &ref_list(&refs))],
            )
        };
        let goal = s.goal.to_string();
        let t = self.template("initial");
        let text = crate::i18n::fill(&t, &[("goal", &goal), ("knowledge", &knowledge)]);
        self.push(id, text, refs);
    }

    fn application(&mut self, id: NodeId) {
        let node = &self.tree.nodes[id];
        let (Some(rule), NodePayload::Application { explanation }) = (&node.rule_id, &node.payload)
        else {
            return;
        };
        let name = match explanation.slots.get("variant") {
            Some(v) => format!("{rule}-{v}"),
            None => rule.clone(),
        };
        let refs_text = ref_list(&explanation.refs);
        let mut args: Vec<(&str, &str)> = explanation
            .slots
            .iter()
            .map(|(k, v)| (k.as_str(), v.as_str()))
            .collect();
        args.push(("refs", &refs_text));
        let t = self.template(&name);
        let text = crate::i18n::fill(&t, &args);
        self.push(id, text, explanation.refs.clone());
    }

    /// Depth-first narration. Proved subtrees follow the successful
    /// alternative only; pruned nodes are skipped.
    fn walk(&mut self, id: NodeId) {
        let node = &self.tree.nodes[id];
        if node.status == Status::Pruned {
            return;
        }
        if node.explain {
            match node.node_type {
                NodeType::Initial => self.initial(id),
                NodeType::And => self.application(id),
                _ => {}
            }
        }
        let follow_success = node.status == Status::Proved
            && matches!(
                node.node_type,
                NodeType::Initial | NodeType::Situation | NodeType::Or
            );
        let kids: Vec<NodeId> = if follow_success {
            node.children
                .iter()
                .copied()
                .find(|c| self.tree.nodes[*c].status == Status::Proved)
                .into_iter()
                .collect()
        } else {
            node.children.clone()
        };
        for k in kids {
            self.walk(k);
        }
    }

    fn conclusion(&mut self) {
        let Some(root) = self.tree.root() else { return };
        let goal = root
            .situation()
            .map(|s| s.goal.to_string())
            .unwrap_or_default();
        if root.status == Status::Proved {
            let t = self.template("conclusion-proved");
            let text = crate::i18n::fill(&t, &[("goal", &goal)]);
            self.push(root.id, text, Vec::new());
            return;
        }
        let stuck = self.tree.deepest_failure().unwrap_or(root);
        let stuck_goal = stuck
            .situation()
            .map(|s| s.goal.to_string())
            .unwrap_or_default();
        let reason_key = stuck
            .reason
            .or(root.reason)
            .map(|r| {
                format!(
                    "reason.{}",
                    serde_json::to_value(r)
                        .ok()
                        .and_then(|v| v.as_str().map(str::to_string))
                        .unwrap_or_default()
                )
            })
            .unwrap_or_else(|| "reason.exhausted".to_string());
        let reason = self.catalogs.tr(&reason_key, self.language, &[]);
        let t = self.template("conclusion-failed");
        let text = crate::i18n::fill(
            &t,
            &[("goal", &goal), ("stuck", &stuck_goal), ("reason", &reason)],
        );
        self.push(root.id, text, Vec::new());
    }
}

fn ref_list(refs: &[LabelRef]) -> String {
    refs.iter()
        .map(|r| format!("({})", r.label))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Renders a finished tree. Nodes with `explain` off get no blocks; their
/// descendants are narrated all the same.
pub fn render_proof(tree: &ProofTree, catalogs: &Catalogs, language: &str) -> Rendered {
    let mut r = Renderer {
        tree,
        catalogs,
        language,
        blocks: Vec::new(),
        nav: NavigationMap::default(),
        fallbacks: Vec::new(),
    };
    if !tree.is_empty() {
        r.walk(0);
        r.conclusion();
    }
    Rendered {
        document: ProofDocument {
            language: language.to_string(),
            success: tree.proved(),
            blocks: r.blocks,
        },
        navigation: r.nav,
        fallbacks: r.fallbacks,
    }
}

impl ProofDocument {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for b in &self.blocks {
            out.push_str(&b.text);
            out.push('\n');
        }
        out
    }

    pub fn to_html(&self) -> String {
        let mut out = format!(
            "<div class=\"proof\" lang=\"{}\">\n",
            escape(&self.language)
        );
        for b in &self.blocks {
            let mut text = escape(&b.text);
            for r in &b.formula_label_refs {
                let label = format!("({})", escape(&r.label));
                let key = r
                    .key
                    .as_ref()
                    .map(|k| escape(&k.to_string()))
                    .unwrap_or_default();
                text = text.replace(
                    &label,
                    &format!("<span class=\"label\" title=\"{key}\">{label}</span>"),
                );
            }
            out.push_str(&format!(
                "<p id=\"block-{}\" data-node=\"{}\">{}</p>\n",
                b.block_id, b.node_id, text
            ));
        }
        out.push_str("</div>\n");
        out
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(c),
        }
    }
    out
}

/// One-line summary of a proof for the record written back.
pub fn summarize(tree: &ProofTree, snapshot: &SettingsSnapshot, catalogs: &Catalogs) -> String {
    let lang = snapshot.language.as_str();
    let strategy = catalogs.tr(&format!("strategy.{}", snapshot.strategy), lang, &[]);
    let count = snapshot.knowledge.len().to_string();
    let nodes = tree.len().to_string();
    if tree.proved() {
        catalogs.tr(
            "presenter.summary.proved",
            lang,
            &[
                ("strategy", &strategy),
                ("count", &count),
                ("nodes", &nodes),
            ],
        )
    } else {
        let reason = tree
            .root()
            .and_then(|r| r.reason)
            .and_then(|r| serde_json::to_value(r).ok())
            .and_then(|v| v.as_str().map(|s| format!("reason.{s}")))
            .unwrap_or_else(|| "reason.exhausted".into());
        let reason = catalogs.tr(&reason, lang, &[]);
        catalogs.tr(
            "presenter.summary.failed",
            lang,
            &[
                ("strategy", &strategy),
                ("count", &count),
                ("reason", &reason),
            ],
        )
    }
}

/// Puts the record right after the goal cell, replacing a record that is
/// already there.
pub fn write_back(
    doc: &mut Document,
    goal_cell: CellId,
    record: ProofResultRecord,
) -> Result<CellId, DocumentError> {
    if doc.cell(goal_cell).is_none() {
        return Err(DocumentError::UnknownCellId(goal_cell));
    }
    let kind = CellKind::ProofResult {
        record: Box::new(record),
    };
    if let Some(Node::Cell(next)) = doc.sibling_after(goal_cell)? {
        if matches!(next.kind, CellKind::ProofResult { .. }) {
            let id = next.id;
            doc.replace_cell_kind(id, kind)?;
            return Ok(id);
        }
    }
    let (parent, pos) = doc.location(goal_cell)?;
    doc.insert_cell(parent, pos + 1, kind)
}
