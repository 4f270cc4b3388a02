use std::collections::{BTreeMap, BTreeSet};
use std::convert::Infallible;
use std::path::PathBuf;

use axum::extract::rejection::JsonRejection;
use axum::extract::{FromRequest, Path as UrlPath, Query, Request, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use futures::stream::{self, Stream};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use tma_core::document::{document_to_json, load_document, save_document, CellId};
use tma_core::formula::parse_formula;
use tma_core::i18n::is_language_tag;
use tma_core::messages;
use tma_core::presenter::render_proof;
use tma_core::prover::{
    compute, resolve_builtins, validate_rule_states, Limits, RuleState, StrategyId, BUILTINS,
    BUILTIN_GROUPS, DEFAULT_MAX_STEPS, RULES,
};
use tma_core::session::{FormulaEntry, FormulaKey, SelectionContext, SelectionUnit};

use crate::error::ApiError;
use crate::state::{goal_and_knowledge, AppState};

type ApiResult<T> = Result<T, ApiError>;

/// JSON body whose rejections come back localized.
pub struct Body<T>(pub T);

impl<T: DeserializeOwned> FromRequest<AppState> for Body<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &AppState) -> Result<Self, ApiError> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(v)) => Ok(Body(v)),
            Err(e) => Err(state.bad_request(&e)),
        }
    }
}

impl AppState {
    fn bad_request(&self, e: &JsonRejection) -> ApiError {
        self.tr_error(
            StatusCode::BAD_REQUEST,
            "bad_request",
            "error.bad_request",
            &[("reason", &e.body_text())],
        )
    }

    fn tr_error(
        &self,
        status: StatusCode,
        code: &'static str,
        key: &str,
        args: &[(&str, &str)],
    ) -> ApiError {
        let lang = self.language();
        ApiError::new(
            status,
            code,
            self.catalogs.read().unwrap().tr(key, &lang, args),
        )
    }

    fn prover_error(&self, e: &tma_core::prover::ProverError) -> ApiError {
        ApiError::prover(&self.catalogs.read().unwrap(), &self.language(), e)
    }

    fn unknown_proof(&self, id: &str) -> ApiError {
        self.tr_error(
            StatusCode::NOT_FOUND,
            "not_found",
            "error.unknown_proof",
            &[("id", id)],
        )
    }
}

pub fn routes() -> Router<AppState> {
    Router::new()
        .route("/documents", get(list_documents))
        .route("/documents/open", post(open_document))
        .route("/documents/save", post(save_doc))
        .route("/documents/content", get(document_content))
        .route("/documents/submit", post(submit))
        .route("/documents/declarations", get(declarations))
        .route("/session/formulae", get(formulae))
        .route("/session/knowledge-tree", get(knowledge_tree))
        .route("/session/archives/save", post(archive_save))
        .route("/session/archives/load", post(archive_load))
        .route(
            "/selections/{context}/knowledge",
            get(get_knowledge).put(put_knowledge),
        )
        .route("/selections/{context}/knowledge/unit", post(toggle_unit))
        .route(
            "/selections/{context}/builtins",
            get(get_builtins).put(put_builtins),
        )
        .route("/builtins", get(list_builtins))
        .route("/prove/goal", get(get_goal))
        .route("/prove/goal/candidate", put(set_candidate))
        .route("/prove/goal/confirm", post(confirm_goal))
        .route("/prove/rules", get(get_rules).put(put_rules))
        .route("/prove/strategy", get(get_strategy).put(put_strategy))
        .route("/prove/limits", get(get_limits).put(put_limits))
        .route("/prove/submit", post(submit_proof))
        .route("/proofs", get(list_proofs))
        .route("/proofs/{id}", axum::routing::delete(discard_proof))
        .route("/proofs/{id}/tree", get(proof_tree))
        .route("/proofs/{id}/events", get(proof_events))
        .route("/proofs/{id}/text", get(proof_text))
        .route("/proofs/{id}/snapshot", get(proof_snapshot))
        .route("/proofs/{id}/restore-settings", post(restore_settings))
        .route("/proofs/{id}/cancel", post(cancel_proof))
        .route("/compute", post(compute_expr))
        .route("/preferences/languages", get(languages))
        .route("/preferences/language", get(get_language).put(put_language))
        .route("/i18n/catalog", get(catalog))
}

// Documents

#[derive(Serialize)]
struct DocumentSummary {
    path: PathBuf,
    cells: usize,
}

async fn list_documents(State(s): State<AppState>) -> Json<Vec<DocumentSummary>> {
    let ws = s.workspace.read().unwrap();
    Json(
        ws.session
            .documents()
            .map(|d| DocumentSummary {
                path: d.path.clone(),
                cells: d.cells().len(),
            })
            .collect(),
    )
}

#[derive(Deserialize)]
struct PathBody {
    path: PathBuf,
}

fn raw_json(text: String) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], text).into_response()
}

async fn open_document(State(s): State<AppState>, Body(b): Body<PathBody>) -> ApiResult<Response> {
    let doc = load_document(&b.path)
        .map_err(|e| ApiError::document(&s.catalogs.read().unwrap(), &s.language(), &e))?;
    let mut ws = s.workspace.write().unwrap();
    Ok(raw_json(document_to_json(ws.session.open_document(doc))))
}

#[derive(Deserialize)]
struct SaveBody {
    path: PathBuf,
    #[serde(default)]
    to: Option<PathBuf>,
}

async fn save_doc(State(s): State<AppState>, Body(b): Body<SaveBody>) -> ApiResult<StatusCode> {
    let ws = s.workspace.read().unwrap();
    let doc = ws
        .session
        .document(&b.path)
        .map_err(|e| s.session_error_with(&ws.language, &e))?;
    save_document(doc, b.to.as_ref().unwrap_or(&doc.path))
        .map_err(|e| ApiError::document(&s.catalogs.read().unwrap(), &ws.language, &e))?;
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Deserialize)]
struct DocQuery {
    path: PathBuf,
    #[serde(default)]
    cell: Option<u64>,
}

async fn document_content(
    State(s): State<AppState>,
    Query(q): Query<DocQuery>,
) -> ApiResult<Response> {
    let ws = s.workspace.read().unwrap();
    let doc = ws
        .session
        .document(&q.path)
        .map_err(|e| s.session_error_with(&ws.language, &e))?;
    Ok(raw_json(document_to_json(doc)))
}

#[derive(Serialize)]
struct Submitted {
    entry: FormulaEntry,
    formula: String,
    warnings: Vec<String>,
}

#[derive(Deserialize)]
struct SubmitBody {
    path: PathBuf,
    #[serde(default)]
    cell: Option<u64>,
}

/// Submits one cell, or every formula cell of the document.
async fn submit(
    State(s): State<AppState>,
    Body(b): Body<SubmitBody>,
) -> ApiResult<Json<Vec<Submitted>>> {
    let mut ws = s.workspace.write().unwrap();
    let results = match b.cell {
        Some(c) => ws.session.submit_cell(&b.path, CellId(c)).map(|r| vec![r]),
        None => ws.session.submit_document(&b.path),
    }
    .map_err(|e| s.session_error_with(&ws.language, &e))?;
    let catalogs = s.catalogs.read().unwrap();
    Ok(Json(
        results
            .into_iter()
            .map(|(entry, warnings)| Submitted {
                formula: entry.formula.to_string(),
                warnings: warnings
                    .iter()
                    .map(|w| messages::warning(&catalogs, &ws.language, w))
                    .collect(),
                entry,
            })
            .collect(),
    ))
}

impl AppState {
    /// For handlers that already hold the workspace lock.
    fn prover_error_with(&self, lang: &str, e: &tma_core::prover::ProverError) -> ApiError {
        ApiError::prover(&self.catalogs.read().unwrap(), lang, e)
    }

    fn session_error_with(&self, lang: &str, e: &tma_core::session::SessionError) -> ApiError {
        ApiError::session(&self.catalogs.read().unwrap(), lang, e)
    }
}

#[derive(Serialize)]
struct DeclarationView {
    text: String,
    origin: FormulaKey,
    declaration: tma_core::Declaration,
}

async fn declarations(
    State(s): State<AppState>,
    Query(q): Query<DocQuery>,
) -> ApiResult<Json<Vec<DeclarationView>>> {
    let ws = s.workspace.read().unwrap();
    let cell = CellId(q.cell.unwrap_or(u64::MAX));
    let decls = ws
        .session
        .declarations_at(&q.path, cell)
        .map_err(|e| s.session_error_with(&ws.language, &e))?;
    Ok(Json(
        decls
            .into_iter()
            .map(|d| DeclarationView {
                text: d.declaration.to_string(),
                origin: d.origin,
                declaration: d.declaration,
            })
            .collect(),
    ))
}

// Session

async fn formulae(State(s): State<AppState>) -> Json<Vec<FormulaEntry>> {
    let ws = s.workspace.read().unwrap();
    Json(ws.session.all_formulae().into_iter().cloned().collect())
}

#[derive(Deserialize)]
struct ContextQuery {
    #[serde(default = "prove_context")]
    context: SelectionContext,
}

fn prove_context() -> SelectionContext {
    SelectionContext::Prove
}

async fn knowledge_tree(State(s): State<AppState>, Query(q): Query<ContextQuery>) -> Json<Value> {
    let ws = s.workspace.read().unwrap();
    Json(json!(ws.session.knowledge_tree(q.context)))
}

#[derive(Deserialize)]
struct ArchiveSaveBody {
    path: PathBuf,
    /// Defaults to every formula in the session.
    #[serde(default)]
    keys: Option<BTreeSet<FormulaKey>>,
}

async fn archive_save(
    State(s): State<AppState>,
    Body(b): Body<ArchiveSaveBody>,
) -> ApiResult<Json<Value>> {
    let ws = s.workspace.read().unwrap();
    let keys = b.keys.unwrap_or_else(|| {
        ws.session
            .all_formulae()
            .into_iter()
            .map(|e| e.key.clone())
            .collect()
    });
    ws.session
        .save_archive(&keys, &b.path)
        .map_err(|e| s.session_error_with(&ws.language, &e))?;
    Ok(Json(json!({ "count": keys.len() })))
}

async fn archive_load(
    State(s): State<AppState>,
    Body(b): Body<PathBody>,
) -> ApiResult<Json<Vec<FormulaEntry>>> {
    let mut ws = s.workspace.write().unwrap();
    let lang = ws.language.clone();
    ws.session
        .load_archive(&b.path)
        .map(Json)
        .map_err(|e| s.session_error_with(&lang, &e))
}

// Selections

#[derive(Serialize, Deserialize)]
struct KnowledgeSelection {
    keys: BTreeSet<FormulaKey>,
}

async fn get_knowledge(
    State(s): State<AppState>,
    UrlPath(ctx): UrlPath<SelectionContext>,
) -> Json<KnowledgeSelection> {
    let ws = s.workspace.read().unwrap();
    Json(KnowledgeSelection {
        keys: ws.session.selection(ctx).clone(),
    })
}

async fn put_knowledge(
    State(s): State<AppState>,
    UrlPath(ctx): UrlPath<SelectionContext>,
    Body(b): Body<KnowledgeSelection>,
) -> ApiResult<Json<KnowledgeSelection>> {
    let mut ws = s.workspace.write().unwrap();
    let lang = ws.language.clone();
    ws.session
        .replace_selection(ctx, b.keys)
        .map_err(|e| s.session_error_with(&lang, &e))?;
    Ok(Json(KnowledgeSelection {
        keys: ws.session.selection(ctx).clone(),
    }))
}

#[derive(Deserialize)]
struct UnitToggle {
    #[serde(flatten)]
    unit: SelectionUnit,
    checked: bool,
}

async fn toggle_unit(
    State(s): State<AppState>,
    UrlPath(ctx): UrlPath<SelectionContext>,
    Body(b): Body<UnitToggle>,
) -> ApiResult<Json<KnowledgeSelection>> {
    let mut ws = s.workspace.write().unwrap();
    let lang = ws.language.clone();
    let keys = ws
        .session
        .set_selection(ctx, &b.unit, b.checked)
        .map_err(|e| s.session_error_with(&lang, &e))?
        .clone();
    Ok(Json(KnowledgeSelection { keys }))
}

#[derive(Serialize, Deserialize)]
struct BuiltinSelection {
    ids: BTreeSet<String>,
}

async fn get_builtins(
    State(s): State<AppState>,
    UrlPath(ctx): UrlPath<SelectionContext>,
) -> Json<BuiltinSelection> {
    let ws = s.workspace.read().unwrap();
    Json(BuiltinSelection {
        ids: ws.session.builtin_selection(ctx).clone(),
    })
}

async fn put_builtins(
    State(s): State<AppState>,
    UrlPath(ctx): UrlPath<SelectionContext>,
    Body(b): Body<BuiltinSelection>,
) -> ApiResult<Json<BuiltinSelection>> {
    resolve_builtins(&b.ids).map_err(|e| s.prover_error(&e))?;
    let mut ws = s.workspace.write().unwrap();
    ws.session.set_builtin_selection(ctx, b.ids);
    Ok(Json(BuiltinSelection {
        ids: ws.session.builtin_selection(ctx).clone(),
    }))
}

#[derive(Serialize)]
struct BuiltinView {
    id: &'static str,
    groups: &'static [&'static str],
    description: String,
}

async fn list_builtins(State(s): State<AppState>) -> Json<Value> {
    let lang = s.language();
    let c = s.catalogs.read().unwrap();
    let groups: Vec<Value> = BUILTIN_GROUPS
        .iter()
        .map(|g| json!({ "id": g, "description": c.tr(&format!("builtin.group.{g}"), &lang, &[]) }))
        .collect();
    let members: Vec<BuiltinView> = BUILTINS
        .iter()
        .map(|b| BuiltinView {
            id: b.id,
            groups: b.groups,
            description: c.tr(&format!("builtin.{}", b.id), &lang, &[]),
        })
        .collect();
    Json(json!({ "groups": groups, "builtins": members }))
}

// Prove workflow

#[derive(Serialize)]
struct GoalView {
    candidate: Option<FormulaKey>,
    confirmed: Option<FormulaKey>,
}

async fn get_goal(State(s): State<AppState>) -> Json<GoalView> {
    let ws = s.workspace.read().unwrap();
    Json(GoalView {
        candidate: ws.candidate.clone(),
        confirmed: ws.confirmed.clone(),
    })
}

#[derive(Deserialize)]
struct CandidateBody {
    key: Option<FormulaKey>,
}

async fn set_candidate(
    State(s): State<AppState>,
    Body(b): Body<CandidateBody>,
) -> ApiResult<Json<GoalView>> {
    let mut ws = s.workspace.write().unwrap();
    if let Some(k) = &b.key {
        let lang = ws.language.clone();
        ws.session
            .entries_for([k])
            .map_err(|e| s.session_error_with(&lang, &e))?;
    }
    ws.candidate = b.key;
    Ok(Json(GoalView {
        candidate: ws.candidate.clone(),
        confirmed: ws.confirmed.clone(),
    }))
}

async fn confirm_goal(State(s): State<AppState>) -> ApiResult<Json<GoalView>> {
    let mut ws = s.workspace.write().unwrap();
    if ws.candidate.is_none() {
        let msg = s
            .catalogs
            .read()
            .unwrap()
            .tr("error.no_goal", &ws.language, &[]);
        return Err(ApiError::new(StatusCode::CONFLICT, "no_goal", msg));
    }
    ws.confirmed = ws.candidate.clone();
    Ok(Json(GoalView {
        candidate: ws.candidate.clone(),
        confirmed: ws.confirmed.clone(),
    }))
}

#[derive(Serialize)]
struct RuleView {
    #[serde(flatten)]
    state: RuleState,
    group_path: Vec<String>,
    description: String,
}

fn rule_views(s: &AppState) -> Vec<RuleView> {
    let ws = s.workspace.read().unwrap();
    let c = s.catalogs.read().unwrap();
    let mut states = tma_core::prover::default_rule_states();
    states.extend(ws.config.rule_states.clone());
    RULES
        .iter()
        .map(|r| RuleView {
            state: states[r.id].clone(),
            group_path: r
                .group_path
                .iter()
                .map(|g| c.tr(&format!("group.{g}"), &ws.language, &[]))
                .collect(),
            description: c.tr(&r.description_key(), &ws.language, &[]),
        })
        .collect()
}

async fn get_rules(State(s): State<AppState>) -> Json<Vec<RuleView>> {
    Json(rule_views(&s))
}

/// Partial update; rules left out keep their state.
async fn put_rules(
    State(s): State<AppState>,
    Body(b): Body<BTreeMap<String, RuleState>>,
) -> ApiResult<Json<Vec<RuleView>>> {
    validate_rule_states(&b).map_err(|e| s.prover_error(&e))?;
    s.workspace.write().unwrap().config.rule_states.extend(b);
    Ok(Json(rule_views(&s)))
}

#[derive(Serialize, Deserialize)]
struct StrategyBody {
    strategy: String,
}

async fn get_strategy(State(s): State<AppState>) -> Json<Value> {
    let ws = s.workspace.read().unwrap();
    let c = s.catalogs.read().unwrap();
    let available: Vec<Value> = StrategyId::ALL
        .iter()
        .map(|id| json!({ "id": id.as_str(), "description": c.tr(&format!("strategy.{id}"), &ws.language, &[]) }))
        .collect();
    Json(json!({ "strategy": ws.config.strategy, "available": available }))
}

async fn put_strategy(
    State(s): State<AppState>,
    Body(b): Body<StrategyBody>,
) -> ApiResult<Json<Value>> {
    let id: StrategyId = b.strategy.parse().map_err(|e| s.prover_error(&e))?;
    s.workspace.write().unwrap().config.strategy = id;
    Ok(get_strategy(State(s)).await)
}

async fn get_limits(State(s): State<AppState>) -> Json<Limits> {
    Json(s.workspace.read().unwrap().limits().clone())
}

async fn put_limits(State(s): State<AppState>, Body(b): Body<Limits>) -> ApiResult<Json<Limits>> {
    let mut ws = s.workspace.write().unwrap();
    let previous = std::mem::replace(&mut ws.config.limits, b);
    if let Err(e) = ws.snapshot_limits_ok() {
        ws.config.limits = previous;
        return Err(s.prover_error_with(&ws.language, &e));
    }
    Ok(Json(ws.config.limits.clone()))
}

impl crate::state::Workspace {
    fn snapshot_limits_ok(&self) -> Result<(), tma_core::prover::ProverError> {
        let mut probe = tma_core::prover::SettingsSnapshot::new(FormulaKey::new("/", CellId(1)));
        probe.limits = self.config.limits.clone();
        probe.validate()
    }
}

async fn submit_proof(State(s): State<AppState>) -> ApiResult<(StatusCode, Json<Value>)> {
    let (snapshot, goal, knowledge) = {
        let ws = s.workspace.read().unwrap();
        let snapshot = ws
            .snapshot()
            .map_err(|e| s.prover_error_with(&ws.language, &e))?;
        let (goal, knowledge) = goal_and_knowledge(&ws.session, &snapshot)
            .map_err(|e| s.session_error_with(&ws.language, &e))?;
        (snapshot, goal, knowledge)
    };
    let job = s.start_proof(snapshot, goal, knowledge);
    Ok((StatusCode::ACCEPTED, Json(json!({ "proof_id": job.id }))))
}

// Proofs

async fn list_proofs(State(s): State<AppState>) -> Json<Value> {
    let jobs = s.jobs.read().unwrap();
    let list: Vec<Value> = jobs
        .values()
        .map(|j| json!({ "proof_id": j.id, "finished": j.is_finished(), "goal": j.snapshot.goal_key }))
        .collect();
    Json(json!(list))
}

async fn discard_proof(
    State(s): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<StatusCode> {
    let job = s
        .jobs
        .write()
        .unwrap()
        .remove(&id)
        .ok_or_else(|| s.unknown_proof(&id))?;
    job.cancel.store(true, std::sync::atomic::Ordering::Relaxed);
    Ok(StatusCode::NO_CONTENT)
}

async fn cancel_proof(
    State(s): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<StatusCode> {
    let job = s.job(&id).ok_or_else(|| s.unknown_proof(&id))?;
    job.cancel.store(true, std::sync::atomic::Ordering::Relaxed);
    Ok(StatusCode::ACCEPTED)
}

async fn proof_tree(
    State(s): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<Response> {
    let job = s.job(&id).ok_or_else(|| s.unknown_proof(&id))?;
    Ok(raw_json(job.tree().canonical_json()))
}

#[derive(Deserialize)]
struct EventsQuery {
    /// Last sequence number the client has seen.
    #[serde(default)]
    from: Option<u64>,
}

/// Server-sent events. Resuming with `from=N` (or `Last-Event-ID: N`)
/// delivers events N+1 onwards; the stream closes after `finished`.
async fn proof_events(
    State(s): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<EventsQuery>,
    headers: HeaderMap,
) -> ApiResult<Sse<impl Stream<Item = Result<Event, Infallible>>>> {
    let job = s.job(&id).ok_or_else(|| s.unknown_proof(&id))?;
    let last_id = headers
        .get("last-event-id")
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.parse::<u64>().ok());
    let cursor = q.from.or(last_id).unwrap_or(0) as usize;
    let rx = job.subscribe();
    let stream = stream::unfold(
        (job, rx, cursor, false),
        |(job, mut rx, cursor, done)| async move {
            if done {
                return None;
            }
            loop {
                // Read the flag first: events recorded before it was set are
                // then guaranteed to be visible below.
                let finished = job.is_finished();
                let batch = job.events_from(cursor);
                if !batch.is_empty() {
                    let next = cursor + batch.len();
                    let events: Vec<Result<Event, Infallible>> = batch
                        .iter()
                        .map(|e| {
                            Ok(Event::default()
                                .id(e.seq.to_string())
                                .event("proof")
                                .data(serde_json::to_string(e).expect("events serialize")))
                        })
                        .collect();
                    return Some((stream::iter(events), (job, rx, next, false)));
                }
                if finished {
                    return None;
                }
                if rx.changed().await.is_err() {
                    return None;
                }
            }
        },
    );
    use futures::StreamExt;
    Ok(Sse::new(stream.flatten()).keep_alive(KeepAlive::default()))
}

#[derive(Deserialize)]
struct TextQuery {
    #[serde(default)]
    lang: Option<String>,
    #[serde(default)]
    format: Option<String>,
}

async fn proof_text(
    State(s): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<TextQuery>,
) -> ApiResult<Response> {
    let job = s.job(&id).ok_or_else(|| s.unknown_proof(&id))?;
    if !job.is_finished() {
        return Err(s.tr_error(
            StatusCode::CONFLICT,
            "running",
            "error.proof_running",
            &[("id", &id)],
        ));
    }
    let lang = q.lang.unwrap_or_else(|| s.language());
    let c = s.catalogs.read().unwrap();
    if !c.has_language(&lang) {
        let msg = c.tr("error.unknown_language", &s.language(), &[("lang", &lang)]);
        return Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "invalid",
            msg,
        ));
    }
    let rendered = render_proof(&job.tree(), &c, &lang);
    Ok(match q.format.as_deref() {
        Some("text") => rendered.document.to_text().into_response(),
        Some("html") => axum::response::Html(rendered.document.to_html()).into_response(),
        _ => Json(json!({
            "document": rendered.document,
            "navigation": rendered.navigation,
            "fallbacks": rendered.fallbacks,
            "written_to": job.written_to(),
        }))
        .into_response(),
    })
}

async fn proof_snapshot(
    State(s): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<Json<Value>> {
    let job = s.job(&id).ok_or_else(|| s.unknown_proof(&id))?;
    Ok(Json(json!(job.snapshot)))
}

async fn restore_settings(
    State(s): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<StatusCode> {
    let job = s.job(&id).ok_or_else(|| s.unknown_proof(&id))?;
    let mut ws = s.workspace.write().unwrap();
    ws.restore(&job.snapshot)
        .map_err(|e| ApiError::prover(&s.catalogs.read().unwrap(), &ws.language, &e))?;
    Ok(StatusCode::NO_CONTENT)
}

// Compute

#[derive(Deserialize)]
struct ComputeBody {
    expr: String,
    /// Take knowledge and built-ins from the compute selections.
    #[serde(
        default,
        rename = "use-compute-selections",
        alias = "use_compute_selections"
    )]
    use_compute_selections: bool,
    #[serde(default)]
    max_steps: Option<usize>,
}

async fn compute_expr(
    State(s): State<AppState>,
    Body(b): Body<ComputeBody>,
) -> ApiResult<Json<Value>> {
    let lang = s.language();
    let expr = parse_formula(&b.expr).map_err(|e| ApiError {
        status: StatusCode::UNPROCESSABLE_ENTITY,
        error: "parse",
        message: messages::parse_error(&s.catalogs.read().unwrap(), &lang, &e),
        span: Some(crate::error::Span {
            start: e.start,
            end: e.end,
        }),
    })?;
    let (knowledge, builtins) = if b.use_compute_selections {
        let ws = s.workspace.read().unwrap();
        let k = ws
            .session
            .entries_for(ws.session.selection(SelectionContext::Compute))
            .map_err(|e| s.session_error_with(&lang, &e))?;
        let b = resolve_builtins(ws.session.builtin_selection(SelectionContext::Compute))
            .map_err(|e| s.prover_error_with(&lang, &e))?;
        (k, b)
    } else {
        (Vec::new(), tma_core::prover::ActiveBuiltins::none())
    };
    let max = b.max_steps.unwrap_or(DEFAULT_MAX_STEPS);
    let out = tokio::task::spawn_blocking(move || compute(&expr, &knowledge, &builtins, max))
        .await
        .expect("compute does not panic");
    let c = s.catalogs.read().unwrap();
    match out {
        Ok(r) => Ok(Json(json!({
            "result": r.result.to_string(),
            "ast": r.result,
            "trace": r.trace,
        }))),
        Err(e) => Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "step_limit",
            messages::compute_error(&c, &lang, &e),
        )),
    }
}

// Preferences

async fn languages(State(s): State<AppState>) -> Json<Value> {
    let c = s.catalogs.read().unwrap();
    Json(json!({ "languages": c.available_languages() }))
}

#[derive(Serialize, Deserialize)]
struct LanguageBody {
    language: String,
}

async fn get_language(State(s): State<AppState>) -> Json<LanguageBody> {
    Json(LanguageBody {
        language: s.language(),
    })
}

async fn put_language(
    State(s): State<AppState>,
    Body(b): Body<LanguageBody>,
) -> ApiResult<Json<LanguageBody>> {
    let known =
        is_language_tag(&b.language) && s.catalogs.read().unwrap().has_language(&b.language);
    if !known {
        return Err(s.tr_error(
            StatusCode::UNPROCESSABLE_ENTITY,
            "invalid",
            "error.unknown_language",
            &[("lang", &b.language)],
        ));
    }
    let mut ws = s.workspace.write().unwrap();
    ws.language = b.language.clone();
    ws.config.language = b.language.clone();
    Ok(Json(b))
}

#[derive(Deserialize)]
struct CatalogQuery {
    #[serde(default)]
    lang: Option<String>,
}

/// Every key resolved for one language, English filling the gaps.
async fn catalog(
    State(s): State<AppState>,
    Query(q): Query<CatalogQuery>,
) -> Json<BTreeMap<String, String>> {
    let lang = q.lang.unwrap_or_else(|| s.language());
    let c = s.catalogs.read().unwrap();
    Json(
        c.english()
            .entries
            .keys()
            .map(|k| {
                (
                    k.clone(),
                    c.lookup(k, &lang).unwrap_or_default().to_string(),
                )
            })
            .collect(),
    )
}
