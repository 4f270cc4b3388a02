use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;

use tma_core::document::DocumentError;
use tma_core::i18n::Catalogs;
use tma_core::messages;
use tma_core::prover::ProverError;
use tma_core::session::SessionError;

#[derive(Debug, Serialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: StatusCode,
    pub error: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub span: Option<Span>,
}

impl ApiError {
    pub fn new(status: StatusCode, error: &'static str, message: String) -> Self {
        ApiError {
            status,
            error,
            message,
            span: None,
        }
    }

    pub fn session(c: &Catalogs, lang: &str, e: &SessionError) -> Self {
        let message = messages::session_error(c, lang, e);
        let (status, code) = match e {
            SessionError::UnknownDocument(_) | SessionError::UnknownCellId(_) => {
                (StatusCode::NOT_FOUND, "not_found")
            }
            SessionError::Document(d) => return Self::document(c, lang, d),
            SessionError::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => {
                (StatusCode::NOT_FOUND, "not_found")
            }
            SessionError::Io { .. } => (StatusCode::INTERNAL_SERVER_ERROR, "io"),
            SessionError::Parse { error, .. } => {
                return ApiError {
                    status: StatusCode::UNPROCESSABLE_ENTITY,
                    error: "parse",
                    message,
                    span: Some(Span {
                        start: error.start,
                        end: error.end,
                    }),
                }
            }
            SessionError::EmptySelection => (StatusCode::CONFLICT, "empty_selection"),
            _ => (StatusCode::UNPROCESSABLE_ENTITY, "invalid"),
        };
        ApiError::new(status, code, message)
    }

    pub fn document(c: &Catalogs, lang: &str, e: &DocumentError) -> Self {
        let message = messages::document_error(c, lang, e);
        let (status, code) = match e {
            DocumentError::UnknownCellId(_) | DocumentError::UnknownGroup(_) => {
                (StatusCode::NOT_FOUND, "not_found")
            }
            DocumentError::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => {
                (StatusCode::NOT_FOUND, "not_found")
            }
            DocumentError::Io { .. } => (StatusCode::INTERNAL_SERVER_ERROR, "io"),
            _ => (StatusCode::UNPROCESSABLE_ENTITY, "invalid"),
        };
        ApiError::new(status, code, message)
    }

    pub fn prover(c: &Catalogs, lang: &str, e: &ProverError) -> Self {
        let message = messages::prover_error(c, lang, e);
        match e {
            ProverError::NoGoal => ApiError::new(StatusCode::CONFLICT, "no_goal", message),
            _ => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid", message),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self)).into_response()
    }
}
