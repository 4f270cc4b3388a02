//! HTTP/JSON service over one workspace: documents, session, the prove
//! and compute workflows, proof event streams and preferences. Every
//! route lives under `/api/v1`.

mod api;
mod error;
mod state;

use std::net::SocketAddr;
use std::path::PathBuf;

use axum::Router;

use tma_core::i18n::Catalogs;

pub use error::{ApiError, Span};
pub use state::{AppState, ProofJob, Workspace};

pub const API_PREFIX: &str = "/api/v1";
pub const DEFAULT_ADDR: &str = "127.0.0.1:7878";

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub addr: SocketAddr,
    pub lang_dir: Option<PathBuf>,
    pub language: String,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            addr: DEFAULT_ADDR.parse().expect("valid default address"),
            lang_dir: None,
            language: tma_core::i18n::ENGLISH.to_string(),
        }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .nest(API_PREFIX, api::routes())
        .with_state(state)
}

pub fn app(config: &ServiceConfig) -> (Router, AppState) {
    let catalogs = Catalogs::load(config.lang_dir.as_deref());
    for w in catalogs.warnings() {
        tracing::warn!(?w, "catalog problem");
    }
    let language = if catalogs.has_language(&config.language) {
        config.language.clone()
    } else {
        tma_core::i18n::ENGLISH.to_string()
    };
    let state = AppState::new(catalogs, language);
    (router(state.clone()), state)
}

/// Serves until the process is stopped. `on_bound` receives the actual
/// address, which matters when binding port 0.
pub async fn serve(
    config: ServiceConfig,
    on_bound: impl FnOnce(SocketAddr),
) -> std::io::Result<()> {
    let (router, _) = app(&config);
    let listener = tokio::net::TcpListener::bind(config.addr).await?;
    on_bound(listener.local_addr()?);
    axum::serve(listener, router).await
}
