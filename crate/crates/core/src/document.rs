//! Documents: nested groups of cells with persistent integer cell IDs,
//! stored as versioned JSON (`.tnb`).

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::io;
use std::path::{Component, Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::presenter::ProofResultRecord;

pub const DOCUMENT_FORMAT_VERSION: u32 = 1;
pub const DOCUMENT_EXTENSION: &str = "tnb";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CellId(pub u64);

impl CellId {
    pub const ROOT: CellId = CellId(0);
}

impl fmt::Display for CellId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvKind {
    Definition,
    Theorem,
    Lemma,
    Proposition,
    Corollary,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GroupKind {
    Root,
    Section { level: u8, title: String },
    Environment { env: EnvKind, title: String },
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellKind {
    Formula {
        text: String,
        label: Option<String>,
        /// Automatically assigned numeric label, kept once allocated.
        auto_label: Option<u64>,
    },
    Declaration {
        text: String,
    },
    Text {
        text: String,
    },
    ProofResult {
        record: Box<ProofResultRecord>,
    },
}

impl CellKind {
    pub fn formula(text: impl Into<String>) -> Self {
        CellKind::Formula {
            text: text.into(),
            label: None,
            auto_label: None,
        }
    }

    pub fn labeled_formula(text: impl Into<String>, label: impl Into<String>) -> Self {
        CellKind::Formula {
            text: text.into(),
            label: Some(label.into()),
            auto_label: None,
        }
    }

    pub fn declaration(text: impl Into<String>) -> Self {
        CellKind::Declaration { text: text.into() }
    }

    pub fn text(text: impl Into<String>) -> Self {
        CellKind::Text { text: text.into() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub id: CellId,
    pub kind: CellKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellGroup {
    pub id: CellId,
    pub kind: GroupKind,
    pub children: Vec<Node>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Group(CellGroup),
    Cell(Cell),
}

impl Node {
    pub fn id(&self) -> CellId {
        match self {
            Node::Group(g) => g.id,
            Node::Cell(c) => c.id,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub path: PathBuf,
    pub root: CellGroup,
    pub next_cell_serial: u64,
    /// Next automatic formula label.
    pub next_label: u64,
}

#[derive(Debug, Error)]
pub enum DocumentError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("malformed document: {0}")]
    Format(String),
    #[error("duplicate cell id {0}")]
    DuplicateCellId(CellId),
    #[error("unknown cell id {0}")]
    UnknownCellId(CellId),
    #[error("unknown group {0}")]
    UnknownGroup(CellId),
    #[error("a section cannot be nested inside an environment")]
    SectionInEnvironment,
    #[error("insert position {position} is out of bounds")]
    BadPosition { position: usize },
}

/// Absolute, lexically normalized form of `path` (`.` and `..` removed).
pub fn normalize_path(path: &Path) -> PathBuf {
    let abs = std::path::absolute(path).unwrap_or_else(|_| path.to_path_buf());
    let mut out = PathBuf::new();
    for comp in abs.components() {
        match comp {
            Component::CurDir => {}
            Component::ParentDir => {
                out.pop();
            }
            other => out.push(other.as_os_str()),
        }
    }
    out
}

impl Document {
    pub fn new(path: impl AsRef<Path>) -> Self {
        Document {
            path: normalize_path(path.as_ref()),
            root: CellGroup {
                id: CellId::ROOT,
                kind: GroupKind::Root,
                children: Vec::new(),
            },
            next_cell_serial: 1,
            next_label: 1,
        }
    }

    fn allocate(&mut self) -> CellId {
        let id = CellId(self.next_cell_serial);
        self.next_cell_serial += 1;
        id
    }

    pub fn group(&self, id: CellId) -> Option<&CellGroup> {
        find_group(&self.root, id)
    }

    fn group_mut(&mut self, id: CellId) -> Option<&mut CellGroup> {
        find_group_mut(&mut self.root, id)
    }

    pub fn cell(&self, id: CellId) -> Option<&Cell> {
        self.cells().into_iter().find(|c| c.id == id)
    }

    pub fn cell_mut(&mut self, id: CellId) -> Option<&mut Cell> {
        fn walk(g: &mut CellGroup, id: CellId) -> Option<&mut Cell> {
            for child in &mut g.children {
                match child {
                    Node::Cell(c) if c.id == id => return Some(c),
                    Node::Group(sub) => {
                        if let Some(c) = walk(sub, id) {
                            return Some(c);
                        }
                    }
                    _ => {}
                }
            }
            None
        }
        walk(&mut self.root, id)
    }

    /// All cells in document order (pre-order traversal).
    pub fn cells(&self) -> Vec<&Cell> {
        fn walk<'a>(g: &'a CellGroup, out: &mut Vec<&'a Cell>) {
            for child in &g.children {
                match child {
                    Node::Cell(c) => out.push(c),
                    Node::Group(sub) => walk(sub, out),
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut out);
        out
    }

    /// All groups in document order, the root first.
    pub fn groups(&self) -> Vec<&CellGroup> {
        fn walk<'a>(g: &'a CellGroup, out: &mut Vec<&'a CellGroup>) {
            out.push(g);
            for child in &g.children {
                if let Node::Group(sub) = child {
                    walk(sub, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut out);
        out
    }

    /// Position of a cell in document order.
    pub fn order_of(&self, id: CellId) -> Option<usize> {
        self.cells().iter().position(|c| c.id == id)
    }

    /// Groups containing the cell or group `id`, outermost first. The last
    /// element is the tightest group around it.
    pub fn enclosing_groups(&self, id: CellId) -> Result<Vec<&CellGroup>, DocumentError> {
        fn walk<'a>(g: &'a CellGroup, id: CellId, path: &mut Vec<&'a CellGroup>) -> bool {
            path.push(g);
            for child in &g.children {
                if child.id() == id {
                    return true;
                }
                if let Node::Group(sub) = child {
                    if walk(sub, id, path) {
                        return true;
                    }
                }
            }
            path.pop();
            false
        }
        let mut path = Vec::new();
        if walk(&self.root, id, &mut path) {
            Ok(path)
        } else {
            Err(DocumentError::UnknownCellId(id))
        }
    }

    /// Cells lying anywhere below the group `id`, in document order.
    pub fn cells_in_group(&self, id: CellId) -> Result<Vec<&Cell>, DocumentError> {
        let group = self.group(id).ok_or(DocumentError::UnknownGroup(id))?;
        fn walk<'a>(g: &'a CellGroup, out: &mut Vec<&'a Cell>) {
            for child in &g.children {
                match child {
                    Node::Cell(c) => out.push(c),
                    Node::Group(sub) => walk(sub, out),
                }
            }
        }
        let mut out = Vec::new();
        walk(group, &mut out);
        Ok(out)
    }

    /// Inserts a new cell at `position` among the children of `parent`.
    pub fn insert_cell(
        &mut self,
        parent: CellId,
        position: usize,
        kind: CellKind,
    ) -> Result<CellId, DocumentError> {
        let len = self
            .group(parent)
            .ok_or(DocumentError::UnknownGroup(parent))?
            .children
            .len();
        if position > len {
            return Err(DocumentError::BadPosition { position });
        }
        let id = self.allocate();
        let group = self.group_mut(parent).expect("checked above");
        group
            .children
            .insert(position, Node::Cell(Cell { id, kind }));
        Ok(id)
    }

    /// Appends a cell at the end of `parent`.
    pub fn push_cell(&mut self, parent: CellId, kind: CellKind) -> Result<CellId, DocumentError> {
        let len = self
            .group(parent)
            .ok_or(DocumentError::UnknownGroup(parent))?
            .children
            .len();
        self.insert_cell(parent, len, kind)
    }

    /// Inserts an empty group. Sections may not be placed inside
    /// environments.
    pub fn insert_group(
        &mut self,
        parent: CellId,
        position: usize,
        kind: GroupKind,
    ) -> Result<CellId, DocumentError> {
        if kind == GroupKind::Root {
            return Err(DocumentError::Format("only one root group".into()));
        }
        let chain = self.enclosing_groups_of_group(parent)?;
        if matches!(kind, GroupKind::Section { .. })
            && chain
                .iter()
                .any(|g| matches!(g.kind, GroupKind::Environment { .. }))
        {
            return Err(DocumentError::SectionInEnvironment);
        }
        let len = self.group(parent).expect("resolved above").children.len();
        if position > len {
            return Err(DocumentError::BadPosition { position });
        }
        let id = self.allocate();
        let group = self.group_mut(parent).expect("resolved above");
        group.children.insert(
            position,
            Node::Group(CellGroup {
                id,
                kind,
                children: Vec::new(),
            }),
        );
        Ok(id)
    }

    pub fn push_group(&mut self, parent: CellId, kind: GroupKind) -> Result<CellId, DocumentError> {
        let len = self
            .group(parent)
            .ok_or(DocumentError::UnknownGroup(parent))?
            .children
            .len();
        self.insert_group(parent, len, kind)
    }

    fn enclosing_groups_of_group(&self, id: CellId) -> Result<Vec<&CellGroup>, DocumentError> {
        if id == CellId::ROOT {
            return Ok(vec![&self.root]);
        }
        let mut chain = self
            .enclosing_groups(id)
            .map_err(|_| DocumentError::UnknownGroup(id))?;
        chain.push(self.group(id).ok_or(DocumentError::UnknownGroup(id))?);
        Ok(chain)
    }

    /// Removes a cell or a whole group. Serials are never reused.
    pub fn remove(&mut self, id: CellId) -> Result<Node, DocumentError> {
        let parent = self
            .enclosing_groups(id)?
            .last()
            .map(|g| g.id)
            .expect("non-empty chain");
        let group = self.group_mut(parent).expect("parent exists");
        let pos = group
            .children
            .iter()
            .position(|n| n.id() == id)
            .expect("child of its parent");
        Ok(group.children.remove(pos))
    }

    /// Replaces the source text of a formula, declaration or text cell.
    pub fn set_text(
        &mut self,
        id: CellId,
        new_text: impl Into<String>,
    ) -> Result<(), DocumentError> {
        let cell = self.cell_mut(id).ok_or(DocumentError::UnknownCellId(id))?;
        match &mut cell.kind {
            CellKind::Formula { text, .. }
            | CellKind::Declaration { text }
            | CellKind::Text { text } => {
                *text = new_text.into();
                Ok(())
            }
            CellKind::ProofResult { .. } => Err(DocumentError::Format(
                "proof result cells have no editable text".into(),
            )),
        }
    }

    /// Parent group id and index of `id` among its siblings.
    pub fn location(&self, id: CellId) -> Result<(CellId, usize), DocumentError> {
        let chain = self.enclosing_groups(id)?;
        let parent = chain.last().expect("non-empty chain");
        let pos = parent
            .children
            .iter()
            .position(|n| n.id() == id)
            .expect("child of its parent");
        Ok((parent.id, pos))
    }

    pub(crate) fn replace_cell_kind(
        &mut self,
        id: CellId,
        kind: CellKind,
    ) -> Result<(), DocumentError> {
        let cell = self.cell_mut(id).ok_or(DocumentError::UnknownCellId(id))?;
        cell.kind = kind;
        Ok(())
    }

    pub(crate) fn sibling_after(&self, id: CellId) -> Result<Option<&Node>, DocumentError> {
        let (parent, pos) = self.location(id)?;
        Ok(self.group(parent).and_then(|g| g.children.get(pos + 1)))
    }
}

fn find_group(g: &CellGroup, id: CellId) -> Option<&CellGroup> {
    if g.id == id {
        return Some(g);
    }
    g.children.iter().find_map(|child| match child {
        Node::Group(sub) => find_group(sub, id),
        Node::Cell(_) => None,
    })
}

fn find_group_mut(g: &mut CellGroup, id: CellId) -> Option<&mut CellGroup> {
    if g.id == id {
        return Some(g);
    }
    g.children.iter_mut().find_map(|child| match child {
        Node::Group(sub) => find_group_mut(sub, id),
        Node::Cell(_) => None,
    })
}

// On-disk representation.

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileDocument {
    version: u32,
    next_cell_serial: u64,
    #[serde(default = "one")]
    next_label: u64,
    cells: Vec<FileNode>,
}

fn one() -> u64 {
    1
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum FileNode {
    Section {
        id: CellId,
        level: u8,
        title: String,
        children: Vec<FileNode>,
    },
    Environment {
        id: CellId,
        env: EnvKind,
        title: String,
        children: Vec<FileNode>,
    },
    Formula {
        id: CellId,
        text: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        auto_label: Option<u64>,
    },
    Declaration {
        id: CellId,
        text: String,
    },
    Text {
        id: CellId,
        text: String,
    },
    ProofResult {
        id: CellId,
        record: Box<ProofResultRecord>,
    },
}

fn to_file(node: &Node) -> FileNode {
    match node {
        Node::Group(g) => {
            let children = g.children.iter().map(to_file).collect();
            match &g.kind {
                GroupKind::Section { level, title } => FileNode::Section {
                    id: g.id,
                    level: *level,
                    title: title.clone(),
                    children,
                },
                GroupKind::Environment { env, title } => FileNode::Environment {
                    id: g.id,
                    env: *env,
                    title: title.clone(),
                    children,
                },
                GroupKind::Root => unreachable!("root is never a child"),
            }
        }
        Node::Cell(c) => match &c.kind {
            CellKind::Formula {
                text,
                label,
                auto_label,
            } => FileNode::Formula {
                id: c.id,
                text: text.clone(),
                label: label.clone(),
                auto_label: *auto_label,
            },
            CellKind::Declaration { text } => FileNode::Declaration {
                id: c.id,
                text: text.clone(),
            },
            CellKind::Text { text } => FileNode::Text {
                id: c.id,
                text: text.clone(),
            },
            CellKind::ProofResult { record } => FileNode::ProofResult {
                id: c.id,
                record: record.clone(),
            },
        },
    }
}

fn from_file(
    node: FileNode,
    in_environment: bool,
    seen: &mut BTreeSet<CellId>,
) -> Result<Node, DocumentError> {
    let mut claim = |id: CellId| {
        if id == CellId::ROOT || !seen.insert(id) {
            Err(DocumentError::DuplicateCellId(id))
        } else {
            Ok(())
        }
    };
    Ok(match node {
        FileNode::Section {
            id,
            level,
            title,
            children,
        } => {
            claim(id)?;
            if in_environment {
                return Err(DocumentError::SectionInEnvironment);
            }
            Node::Group(CellGroup {
                id,
                kind: GroupKind::Section { level, title },
                children: children
                    .into_iter()
                    .map(|c| from_file(c, false, seen))
                    .collect::<Result<_, _>>()?,
            })
        }
        FileNode::Environment {
            id,
            env,
            title,
            children,
        } => {
            claim(id)?;
            Node::Group(CellGroup {
                id,
                kind: GroupKind::Environment { env, title },
                children: children
                    .into_iter()
                    .map(|c| from_file(c, true, seen))
                    .collect::<Result<_, _>>()?,
            })
        }
        FileNode::Formula {
            id,
            text,
            label,
            auto_label,
        } => {
            claim(id)?;
            Node::Cell(Cell {
                id,
                kind: CellKind::Formula {
                    text,
                    label,
                    auto_label,
                },
            })
        }
        FileNode::Declaration { id, text } => {
            claim(id)?;
            Node::Cell(Cell {
                id,
                kind: CellKind::Declaration { text },
            })
        }
        FileNode::Text { id, text } => {
            claim(id)?;
            Node::Cell(Cell {
                id,
                kind: CellKind::Text { text },
            })
        }
        FileNode::ProofResult { id, record } => {
            claim(id)?;
            Node::Cell(Cell {
                id,
                kind: CellKind::ProofResult { record },
            })
        }
    })
}

/// Parses document JSON; `path` becomes the document's identity.
pub fn document_from_json(json: &str, path: &Path) -> Result<Document, DocumentError> {
    let value: serde_json::Value =
        serde_json::from_str(json).map_err(|e| DocumentError::Format(e.to_string()))?;
    match value.get("version").and_then(|v| v.as_u64()) {
        Some(v) if v == u64::from(DOCUMENT_FORMAT_VERSION) => {}
        Some(v) => return Err(DocumentError::Format(format!("unsupported version {v}"))),
        None => return Err(DocumentError::Format("missing version field".into())),
    }
    let file: FileDocument =
        serde_json::from_value(value).map_err(|e| DocumentError::Format(e.to_string()))?;
    let mut seen = BTreeSet::new();
    let children = file
        .cells
        .into_iter()
        .map(|n| from_file(n, false, &mut seen))
        .collect::<Result<Vec<_>, _>>()?;
    let max = seen.iter().next_back().map_or(0, |id| id.0);
    Ok(Document {
        path: normalize_path(path),
        root: CellGroup {
            id: CellId::ROOT,
            kind: GroupKind::Root,
            children,
        },
        next_cell_serial: file.next_cell_serial.max(max + 1),
        next_label: file.next_label.max(1),
    })
}

pub fn document_to_json(doc: &Document) -> String {
    let file = FileDocument {
        version: DOCUMENT_FORMAT_VERSION,
        next_cell_serial: doc.next_cell_serial,
        next_label: doc.next_label,
        cells: doc.root.children.iter().map(to_file).collect(),
    };
    serde_json::to_string_pretty(&file).expect("document serialization is infallible")
}

pub fn load_document(path: impl AsRef<Path>) -> Result<Document, DocumentError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| DocumentError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    document_from_json(&text, path)
}

pub fn save_document(doc: &Document, path: impl AsRef<Path>) -> Result<(), DocumentError> {
    let path = path.as_ref();
    let mut text = document_to_json(doc);
    text.push('\n');
    fs::write(path, text).map_err(|source| DocumentError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Document {
        let mut doc = Document::new("/tmp/sample.tnb");
        let sec = doc
            .push_group(
                CellId::ROOT,
                GroupKind::Section {
                    level: 1,
                    title: "Vickrey".into(),
                },
            )
            .unwrap();
        let env = doc
            .push_group(
                sec,
                GroupKind::Environment {
                    env: EnvKind::Definition,
                    title: "Bids".into(),
                },
            )
            .unwrap();
        doc.push_cell(env, CellKind::declaration("forall[{b, x, p, v}]"))
            .unwrap();
        doc.push_cell(
            env,
            CellKind::formula("bids[b] :<=> forall[j=1..|b|, b_j >= 0]"),
        )
        .unwrap();
        doc.push_cell(CellId::ROOT, CellKind::text("closing remark"))
            .unwrap();
        doc
    }

    #[test]
    fn enclosing_chain() {
        let doc = sample();
        let chain: Vec<CellId> = doc
            .enclosing_groups(CellId(4))
            .unwrap()
            .iter()
            .map(|g| g.id)
            .collect();
        assert_eq!(chain, vec![CellId::ROOT, CellId(1), CellId(2)]);
        let top: Vec<CellId> = doc
            .enclosing_groups(CellId(5))
            .unwrap()
            .iter()
            .map(|g| g.id)
            .collect();
        assert_eq!(top, vec![CellId::ROOT]);
        assert!(matches!(
            doc.enclosing_groups(CellId(99)),
            Err(DocumentError::UnknownCellId(CellId(99)))
        ));
    }

    #[test]
    fn first_insert_gets_serial_one() {
        let mut doc = Document::new("/tmp/x.tnb");
        let id = doc.push_cell(CellId::ROOT, CellKind::formula("a")).unwrap();
        assert_eq!(id, CellId(1));
    }

    #[test]
    fn serials_never_reused() {
        // Every interleaving of up to 6 inserts/deletes keeps serials fresh.
        for mask in 0u32..(1 << 6) {
            let mut doc = Document::new("/tmp/x.tnb");
            let mut issued = BTreeSet::new();
            let mut live: Vec<CellId> = Vec::new();
            for step in 0..6 {
                if mask & (1 << step) != 0 && !live.is_empty() {
                    let id = live.remove(0);
                    doc.remove(id).unwrap();
                } else {
                    let id = doc.push_cell(CellId::ROOT, CellKind::formula("a")).unwrap();
                    assert!(issued.insert(id), "serial {id} reused");
                    live.push(id);
                }
            }
        }
    }

    #[test]
    fn environment_keeps_kind_and_rejects_sections() {
        let mut doc = sample();
        let id = doc.push_cell(CellId(2), CellKind::formula("a")).unwrap();
        let chain = doc.enclosing_groups(id).unwrap();
        assert!(matches!(
            chain.last().unwrap().kind,
            GroupKind::Environment {
                env: EnvKind::Definition,
                ..
            }
        ));
        assert!(matches!(
            doc.push_group(
                CellId(2),
                GroupKind::Section {
                    level: 2,
                    title: "no".into()
                }
            ),
            Err(DocumentError::SectionInEnvironment)
        ));
        assert!(matches!(
            doc.push_cell(CellId(77), CellKind::formula("a")),
            Err(DocumentError::UnknownGroup(_))
        ));
    }

    #[test]
    fn json_round_trip() {
        let doc = sample();
        let json = document_to_json(&doc);
        let back = document_from_json(&json, &doc.path).unwrap();
        assert_eq!(back, doc);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let json = r#"{"version":1,"next_cell_serial":8,"cells":[
            {"type":"formula","id":7,"text":"a"},
            {"type":"formula","id":7,"text":"b"}]}"#;
        assert!(matches!(
            document_from_json(json, Path::new("/tmp/d.tnb")),
            Err(DocumentError::DuplicateCellId(CellId(7)))
        ));
    }

    #[test]
    fn version_is_mandatory() {
        let json = r#"{"next_cell_serial":1,"cells":[]}"#;
        assert!(matches!(
            document_from_json(json, Path::new("/tmp/d.tnb")),
            Err(DocumentError::Format(_))
        ));
    }

    #[test]
    fn next_serial_exceeds_max() {
        let json =
            r#"{"version":1,"next_cell_serial":1,"cells":[{"type":"text","id":9,"text":"x"}]}"#;
        let doc = document_from_json(json, Path::new("/tmp/d.tnb")).unwrap();
        assert_eq!(doc.next_cell_serial, 10);
    }

    #[test]
    fn normalizes_paths() {
        assert_eq!(
            normalize_path(Path::new("/a/b/../c/./d.tnb")),
            PathBuf::from("/a/c/d.tnb")
        );
    }
}
