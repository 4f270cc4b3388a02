//! The formula session: elaboration of submitted cells under the global
//! declarations in scope, labels and keys, knowledge selections and
//! archives.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::document::{normalize_path, CellId, CellKind, Document, DocumentError, GroupKind, Node};
use crate::formula::{
    free_variables, parse_declaration, parse_formula, substitute, Binder, Declaration, Formula,
    ParseError, Style,
};

pub const ARCHIVE_FORMAT_VERSION: u32 = 1;
pub const ARCHIVE_EXTENSION: &str = "tarch";

/// Identity of a formula: the absolute document path plus the cell id.
/// Serialized as `path#serial`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FormulaKey {
    pub doc_path: PathBuf,
    pub cell_id: CellId,
}

impl FormulaKey {
    pub fn new(doc_path: impl AsRef<Path>, cell_id: CellId) -> Self {
        FormulaKey {
            doc_path: normalize_path(doc_path.as_ref()),
            cell_id,
        }
    }
}

/// `path#serial`.
impl fmt::Display for FormulaKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.doc_path.display(), self.cell_id)
    }
}

impl Serialize for FormulaKey {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FormulaKey {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("formula reference must look like path#serial, got {0:?}")]
pub struct BadFormulaRef(pub String);

impl FromStr for FormulaKey {
    type Err = BadFormulaRef;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (path, serial) = s.rsplit_once('#').ok_or_else(|| BadFormulaRef(s.into()))?;
        let serial: u64 = serial.parse().map_err(|_| BadFormulaRef(s.into()))?;
        if path.is_empty() {
            return Err(BadFormulaRef(s.into()));
        }
        Ok(FormulaKey::new(path, CellId(serial)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormulaEntry {
    pub key: FormulaKey,
    pub label: String,
    pub formula: Formula,
    pub source_text: String,
}

/// A declaration together with the cell it was written in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GlobalDeclaration {
    pub declaration: Declaration,
    pub origin: FormulaKey,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    DuplicateLabel { label: String, existing: FormulaKey },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionContext {
    Prove,
    Compute,
}

/// Something a browser check-box can stand for.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "unit", rename_all = "snake_case")]
pub enum SelectionUnit {
    Formula { key: FormulaKey },
    Group { doc_path: PathBuf, group: CellId },
    Document { doc_path: PathBuf },
    Archive { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckState {
    Checked,
    Unchecked,
    Partial,
}

impl CheckState {
    /// All / none / mixed over the leaf states.
    pub fn derive<I: IntoIterator<Item = bool>>(leaves: I) -> CheckState {
        let (mut any_on, mut any_off) = (false, false);
        for on in leaves {
            if on {
                any_on = true;
            } else {
                any_off = true;
            }
        }
        match (any_on, any_off) {
            (true, false) => CheckState::Checked,
            (true, true) => CheckState::Partial,
            _ => CheckState::Unchecked,
        }
    }
}

/// Node of the knowledge browser hierarchy.
#[derive(Debug, Clone, Serialize)]
pub struct BrowserNode {
    pub unit: SelectionUnit,
    pub label: String,
    pub state: CheckState,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tooltip: Option<String>,
    pub children: Vec<BrowserNode>,
}

#[derive(Debug, Error)]
pub enum SessionError {
    #[error(transparent)]
    Document(#[from] DocumentError),
    #[error("document {0} is not open")]
    UnknownDocument(PathBuf),
    #[error("unknown cell {0}")]
    UnknownCellId(FormulaKey),
    #[error("cell {0} is not a formula cell")]
    NotAFormulaCell(FormulaKey),
    #[error("in {origin}: {error}")]
    Parse {
        origin: FormulaKey,
        error: ParseError,
    },
    #[error("unknown selection unit")]
    UnknownUnit,
    #[error("nothing selected")]
    EmptySelection,
    #[error("malformed archive: {0}")]
    ArchiveFormat(String),
    #[error("archive version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u64, expected: u32 },
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Applies declarations (outermost first in `decls`) to `f`. The latest
/// declaration is applied first, earlier ones wrap around the result.
/// Quantifiers are only added for variables that occur free.
pub fn apply_declarations(f: &Formula, decls: &[Declaration]) -> Formula {
    let items: Vec<&Declaration> = decls.iter().flat_map(Declaration::items).collect();
    let mut result = f.clone();
    for item in items.into_iter().rev() {
        match item {
            Declaration::Let { name, replacement } => {
                let map = BTreeMap::from([(name.clone(), replacement.clone())]);
                result = substitute(&result, &map);
            }
            Declaration::Implication { lhs } => {
                result = Formula::implies(lhs.clone(), result);
            }
            Declaration::Quantifier { binder } => {
                if let Some(b) = restrict_binder(binder, &free_variables(&result)) {
                    result = Formula::forall(b, result);
                }
            }
            Declaration::Sequence { .. } => unreachable!("items() flattens sequences"),
        }
    }
    result
}

/// Keeps the binder variables occurring in `free`, plus any binder
/// variables its condition needs. `None` when nothing is left.
fn restrict_binder(binder: &Binder, free: &BTreeSet<String>) -> Option<Binder> {
    let mut keep: BTreeSet<&String> = binder.vars.iter().filter(|v| free.contains(*v)).collect();
    if keep.is_empty() {
        return None;
    }
    if let Some(cond) = &binder.condition {
        let cond_free = free_variables(cond);
        keep.extend(binder.vars.iter().filter(|v| cond_free.contains(*v)));
    }
    Some(Binder {
        vars: binder
            .vars
            .iter()
            .filter(|v| keep.contains(v))
            .cloned()
            .collect(),
        condition: binder.condition.clone(),
        range: binder.range.clone(),
    })
}

#[derive(Serialize, Deserialize)]
struct ArchiveFile {
    version: u32,
    entries: Vec<ArchiveEntry>,
}

#[derive(Serialize, Deserialize)]
struct ArchiveEntry {
    doc_path: PathBuf,
    cell_id: CellId,
    label: String,
    #[serde(default)]
    source_text: String,
    ast: Formula,
}

#[derive(Debug, Clone, Default)]
pub struct Session {
    documents: IndexMap<PathBuf, Document>,
    archives: IndexMap<PathBuf, Vec<FormulaKey>>,
    entries: IndexMap<FormulaKey, FormulaEntry>,
    prove_selection: BTreeSet<FormulaKey>,
    compute_selection: BTreeSet<FormulaKey>,
    prove_builtins: BTreeSet<String>,
    compute_builtins: BTreeSet<String>,
}

impl Session {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds or replaces an open document, keyed by its path.
    pub fn open_document(&mut self, doc: Document) -> &Document {
        let path = doc.path.clone();
        self.documents.insert(path.clone(), doc);
        &self.documents[&path]
    }

    pub fn documents(&self) -> impl Iterator<Item = &Document> {
        self.documents.values()
    }

    pub fn document(&self, path: &Path) -> Result<&Document, SessionError> {
        let path = normalize_path(path);
        self.documents
            .get(&path)
            .ok_or(SessionError::UnknownDocument(path))
    }

    pub fn document_mut(&mut self, path: &Path) -> Result<&mut Document, SessionError> {
        let path = normalize_path(path);
        self.documents
            .get_mut(&path)
            .ok_or(SessionError::UnknownDocument(path))
    }

    /// Declarations in scope at a cell: those written earlier in document
    /// order whose nearest enclosing group also contains the cell.
    pub fn declarations_at(
        &self,
        doc_path: &Path,
        cell_id: CellId,
    ) -> Result<Vec<GlobalDeclaration>, SessionError> {
        let doc = self.document(doc_path)?;
        let key = FormulaKey::new(&doc.path, cell_id);
        let chain: BTreeSet<CellId> = doc
            .enclosing_groups(cell_id)
            .map_err(|_| SessionError::UnknownCellId(key.clone()))?
            .iter()
            .map(|g| g.id)
            .collect();
        let mut out = Vec::new();
        for cell in doc.cells() {
            if cell.id == cell_id {
                break;
            }
            let CellKind::Declaration { text } = &cell.kind else {
                continue;
            };
            let scope = doc
                .enclosing_groups(cell.id)?
                .last()
                .map(|g| g.id)
                .expect("non-empty chain");
            if !chain.contains(&scope) {
                continue;
            }
            let origin = FormulaKey::new(&doc.path, cell.id);
            let declaration = parse_declaration(text).map_err(|error| SessionError::Parse {
                origin: origin.clone(),
                error,
            })?;
            out.push(GlobalDeclaration {
                declaration,
                origin,
            });
        }
        Ok(out)
    }

    /// Elaborates a formula cell and stores it. Resubmitting a cell
    /// replaces its entry in place.
    pub fn submit_cell(
        &mut self,
        doc_path: &Path,
        cell_id: CellId,
    ) -> Result<(FormulaEntry, Vec<Warning>), SessionError> {
        let doc = self.document(doc_path)?;
        let key = FormulaKey::new(&doc.path, cell_id);
        let cell = doc
            .cell(cell_id)
            .ok_or_else(|| SessionError::UnknownCellId(key.clone()))?;
        let CellKind::Formula {
            text,
            label,
            auto_label,
        } = &cell.kind
        else {
            return Err(SessionError::NotAFormulaCell(key));
        };
        let (text, user_label, auto_label) = (text.clone(), label.clone(), *auto_label);
        let parsed = parse_formula(&text).map_err(|error| SessionError::Parse {
            origin: key.clone(),
            error,
        })?;
        let decls: Vec<Declaration> = self
            .declarations_at(doc_path, cell_id)?
            .into_iter()
            .map(|d| d.declaration)
            .collect();
        let formula = apply_declarations(&parsed, &decls);

        let mut warnings = Vec::new();
        let label = match user_label {
            Some(label) => {
                if let Some(other) = self
                    .entries
                    .values()
                    .find(|e| e.label == label && e.key != key)
                {
                    warnings.push(Warning::DuplicateLabel {
                        label: label.clone(),
                        existing: other.key.clone(),
                    });
                }
                label
            }
            None => {
                let n = match auto_label {
                    Some(n) => n,
                    None => {
                        let doc = self.document_mut(doc_path)?;
                        let n = doc.next_label;
                        doc.next_label += 1;
                        if let Some(cell) = doc.cell_mut(cell_id) {
                            if let CellKind::Formula { auto_label, .. } = &mut cell.kind {
                                *auto_label = Some(n);
                            }
                        }
                        n
                    }
                };
                n.to_string()
            }
        };
        let entry = FormulaEntry {
            key: key.clone(),
            label,
            formula,
            source_text: text,
        };
        self.entries.insert(key, entry.clone());
        Ok((entry, warnings))
    }

    /// Submits every formula cell of a document in document order.
    pub fn submit_document(
        &mut self,
        doc_path: &Path,
    ) -> Result<Vec<(FormulaEntry, Vec<Warning>)>, SessionError> {
        let ids: Vec<CellId> = self
            .document(doc_path)?
            .cells()
            .into_iter()
            .filter(|c| matches!(c.kind, CellKind::Formula { .. }))
            .map(|c| c.id)
            .collect();
        ids.into_iter()
            .map(|id| self.submit_cell(doc_path, id))
            .collect()
    }

    /// Every entry, in first-submission order.
    pub fn all_formulae(&self) -> Vec<&FormulaEntry> {
        self.entries.values().collect()
    }

    pub fn entry(&self, key: &FormulaKey) -> Option<&FormulaEntry> {
        self.entries.get(key)
    }

    /// The stored entries for `keys`; each must have been submitted.
    pub fn entries_for<'a>(
        &self,
        keys: impl IntoIterator<Item = &'a FormulaKey>,
    ) -> Result<Vec<FormulaEntry>, SessionError> {
        keys.into_iter()
            .map(|k| {
                self.entries
                    .get(k)
                    .cloned()
                    .ok_or_else(|| SessionError::UnknownCellId(k.clone()))
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn save_archive(
        &self,
        selection: &BTreeSet<FormulaKey>,
        path: &Path,
    ) -> Result<(), SessionError> {
        if selection.is_empty() {
            return Err(SessionError::EmptySelection);
        }
        let mut entries = Vec::with_capacity(selection.len());
        // Session order, not key order.
        for entry in self.entries.values().filter(|e| selection.contains(&e.key)) {
            entries.push(ArchiveEntry {
                doc_path: entry.key.doc_path.clone(),
                cell_id: entry.key.cell_id,
                label: entry.label.clone(),
                source_text: entry.source_text.clone(),
                ast: entry.formula.clone(),
            });
        }
        if entries.len() != selection.len() {
            return Err(SessionError::UnknownUnit);
        }
        let file = ArchiveFile {
            version: ARCHIVE_FORMAT_VERSION,
            entries,
        };
        let json = serde_json::to_string(&file).expect("archive serialization is infallible");
        fs::write(path, json).map_err(|source| SessionError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Loads an archive; its entries join the session and the archive
    /// becomes a selectable source.
    pub fn load_archive(&mut self, path: &Path) -> Result<Vec<FormulaEntry>, SessionError> {
        let text = fs::read_to_string(path).map_err(|source| SessionError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| SessionError::ArchiveFormat(e.to_string()))?;
        match value.get("version").and_then(|v| v.as_u64()) {
            Some(v) if v == u64::from(ARCHIVE_FORMAT_VERSION) => {}
            Some(v) => {
                return Err(SessionError::VersionMismatch {
                    found: v,
                    expected: ARCHIVE_FORMAT_VERSION,
                })
            }
            None => return Err(SessionError::ArchiveFormat("missing version".into())),
        }
        let file: ArchiveFile = serde_json::from_value(value)
            .map_err(|e| SessionError::ArchiveFormat(e.to_string()))?;
        let mut loaded = Vec::with_capacity(file.entries.len());
        for e in file.entries {
            let entry = FormulaEntry {
                key: FormulaKey {
                    doc_path: e.doc_path,
                    cell_id: e.cell_id,
                },
                label: e.label,
                formula: e.ast,
                source_text: e.source_text,
            };
            self.entries.insert(entry.key.clone(), entry.clone());
            loaded.push(entry);
        }
        self.archives.insert(
            normalize_path(path),
            loaded.iter().map(|e| e.key.clone()).collect(),
        );
        Ok(loaded)
    }

    pub fn archives(&self) -> impl Iterator<Item = (&PathBuf, &Vec<FormulaKey>)> {
        self.archives.iter()
    }

    /// Keys of submitted formulas covered by a unit, in document order.
    pub fn unit_keys(&self, unit: &SelectionUnit) -> Result<Vec<FormulaKey>, SessionError> {
        let from_cells = |doc: &Document, cells: Vec<&crate::document::Cell>| {
            cells
                .into_iter()
                .filter(|c| matches!(c.kind, CellKind::Formula { .. }))
                .map(|c| FormulaKey::new(&doc.path, c.id))
                .filter(|k| self.entries.contains_key(k))
                .collect::<Vec<_>>()
        };
        match unit {
            SelectionUnit::Formula { key } => {
                if self.entries.contains_key(key) {
                    Ok(vec![key.clone()])
                } else {
                    Err(SessionError::UnknownUnit)
                }
            }
            SelectionUnit::Group { doc_path, group } => {
                let doc = self
                    .document(doc_path)
                    .map_err(|_| SessionError::UnknownUnit)?;
                let cells = doc
                    .cells_in_group(*group)
                    .map_err(|_| SessionError::UnknownUnit)?;
                Ok(from_cells(doc, cells))
            }
            SelectionUnit::Document { doc_path } => {
                let doc = self
                    .document(doc_path)
                    .map_err(|_| SessionError::UnknownUnit)?;
                Ok(from_cells(doc, doc.cells()))
            }
            SelectionUnit::Archive { path } => self
                .archives
                .get(&normalize_path(path))
                .cloned()
                .ok_or(SessionError::UnknownUnit),
        }
    }

    pub fn selection(&self, context: SelectionContext) -> &BTreeSet<FormulaKey> {
        match context {
            SelectionContext::Prove => &self.prove_selection,
            SelectionContext::Compute => &self.compute_selection,
        }
    }

    fn selection_mut(&mut self, context: SelectionContext) -> &mut BTreeSet<FormulaKey> {
        match context {
            SelectionContext::Prove => &mut self.prove_selection,
            SelectionContext::Compute => &mut self.compute_selection,
        }
    }

    /// Selects or deselects every formula of `unit` in one context.
    pub fn set_selection(
        &mut self,
        context: SelectionContext,
        unit: &SelectionUnit,
        selected: bool,
    ) -> Result<&BTreeSet<FormulaKey>, SessionError> {
        let keys = self.unit_keys(unit)?;
        let sel = self.selection_mut(context);
        for key in keys {
            if selected {
                sel.insert(key);
            } else {
                sel.remove(&key);
            }
        }
        Ok(self.selection(context))
    }

    /// Replaces a whole selection; every key must name a session entry.
    pub fn replace_selection(
        &mut self,
        context: SelectionContext,
        keys: BTreeSet<FormulaKey>,
    ) -> Result<(), SessionError> {
        if keys.iter().any(|k| !self.entries.contains_key(k)) {
            return Err(SessionError::UnknownUnit);
        }
        *self.selection_mut(context) = keys;
        Ok(())
    }

    pub fn selection_state(
        &self,
        context: SelectionContext,
        unit: &SelectionUnit,
    ) -> Result<CheckState, SessionError> {
        let sel = self.selection(context);
        Ok(CheckState::derive(
            self.unit_keys(unit)?.iter().map(|k| sel.contains(k)),
        ))
    }

    pub fn builtin_selection(&self, context: SelectionContext) -> &BTreeSet<String> {
        match context {
            SelectionContext::Prove => &self.prove_builtins,
            SelectionContext::Compute => &self.compute_builtins,
        }
    }

    pub fn set_builtin_selection(&mut self, context: SelectionContext, ids: BTreeSet<String>) {
        match context {
            SelectionContext::Prove => self.prove_builtins = ids,
            SelectionContext::Compute => self.compute_builtins = ids,
        }
    }

    /// Browser hierarchy per open document and loaded archive: sections,
    /// environments and formula labels with their check states.
    pub fn knowledge_tree(&self, context: SelectionContext) -> Vec<BrowserNode> {
        let sel = self.selection(context);
        let leaf = |key: &FormulaKey| -> Option<BrowserNode> {
            let entry = self.entries.get(key)?;
            Some(BrowserNode {
                unit: SelectionUnit::Formula { key: key.clone() },
                label: entry.label.clone(),
                state: if sel.contains(key) {
                    CheckState::Checked
                } else {
                    CheckState::Unchecked
                },
                tooltip: Some(crate::formula::format(&entry.formula, Style::Unicode)),
                children: Vec::new(),
            })
        };
        fn fold(children: &[BrowserNode]) -> CheckState {
            let mut leaves = Vec::new();
            fn collect(n: &BrowserNode, out: &mut Vec<bool>) {
                if n.children.is_empty() {
                    if let SelectionUnit::Formula { .. } = n.unit {
                        out.push(n.state == CheckState::Checked);
                    }
                }
                for c in &n.children {
                    collect(c, out);
                }
            }
            for c in children {
                collect(c, &mut leaves);
            }
            CheckState::derive(leaves)
        }
        fn walk(
            doc: &Document,
            nodes: &[Node],
            leaf: &dyn Fn(&FormulaKey) -> Option<BrowserNode>,
        ) -> Vec<BrowserNode> {
            let mut out = Vec::new();
            for node in nodes {
                match node {
                    Node::Cell(c) => {
                        if matches!(c.kind, CellKind::Formula { .. }) {
                            if let Some(n) = leaf(&FormulaKey::new(&doc.path, c.id)) {
                                out.push(n);
                            }
                        }
                    }
                    Node::Group(g) => {
                        let children = walk(doc, &g.children, leaf);
                        if children.is_empty() {
                            continue;
                        }
                        let label = match &g.kind {
                            GroupKind::Section { title, .. } => title.clone(),
                            GroupKind::Environment { env, title } => {
                                format!("{env:?} ({title})")
                            }
                            GroupKind::Root => String::new(),
                        };
                        out.push(BrowserNode {
                            unit: SelectionUnit::Group {
                                doc_path: doc.path.clone(),
                                group: g.id,
                            },
                            label,
                            state: fold(&children),
                            tooltip: None,
                            children,
                        });
                    }
                }
            }
            out
        }
        let mut out = Vec::new();
        for doc in self.documents.values() {
            let children = walk(doc, &doc.root.children, &leaf);
            out.push(BrowserNode {
                unit: SelectionUnit::Document {
                    doc_path: doc.path.clone(),
                },
                label: doc.path.display().to_string(),
                state: fold(&children),
                tooltip: None,
                children,
            });
        }
        for (path, keys) in &self.archives {
            let children: Vec<BrowserNode> = keys.iter().filter_map(&leaf).collect();
            out.push(BrowserNode {
                unit: SelectionUnit::Archive { path: path.clone() },
                label: path.display().to_string(),
                state: fold(&children),
                tooltip: None,
                children,
            });
        }
        out
    }
}
