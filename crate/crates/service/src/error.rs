use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use serde_json::json;
use tripgate::analytics::AnalyticsError;
use tripgate::gates::GateError;
use tripgate::pipeline::PipelineError;

use crate::state::LoadError;

/// An error response: `{"error": {"code": ..., "message": ...}}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
        }
    }

    pub fn bad_request(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }

    pub fn not_found(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, code, message)
    }

    pub fn unprocessable(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, code, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({"error": {"code": self.code, "message": self.message}});
        (self.status, axum::Json(body)).into_response()
    }
}

impl From<GateError> for ApiError {
    fn from(e: GateError) -> Self {
        match e {
            GateError::Parse(_) => Self::bad_request("parse_error", e.to_string()),
            GateError::UnknownGate(_) => Self::unprocessable("unknown_gate", e.to_string()),
            _ => Self::unprocessable("invalid_query", e.to_string()),
        }
    }
}

impl From<AnalyticsError> for ApiError {
    fn from(e: AnalyticsError) -> Self {
        match e {
            AnalyticsError::NoOverlap => Self::unprocessable("no_overlap", e.to_string()),
            _ => Self::unprocessable("analysis_error", e.to_string()),
        }
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Gate(g) => g.into(),
            PipelineError::Analytics(a) => a.into(),
            PipelineError::UnknownStation(_) => Self::not_found("unknown_station", e.to_string()),
            PipelineError::Params(_) => Self::unprocessable("invalid_parameter", e.to_string()),
            PipelineError::Route(_) | PipelineError::Ingest(_) => Self::unprocessable("analysis_error", e.to_string()),
        }
    }
}

impl From<LoadError> for ApiError {
    fn from(e: LoadError) -> Self {
        Self::unprocessable("load_failed", e.to_string())
    }
}
