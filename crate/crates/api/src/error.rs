use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use fsm_core::gateway::GatewayError;
use fsm_core::{FacilityError, RouterError};
use serde::{Deserialize, Serialize};

/// Error body returned by every endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    pub http_status: u16,
    pub code: String,
    pub message: String,
}

/// The closed set of `code` values.
pub const ERROR_CODES: &[&str] = &[
    "bad_request",
    "malformed_payload",
    "empty_utterance",
    "unknown_zone",
    "unknown_device",
    "unknown_kind",
    "not_found",
    "method_not_allowed",
    "invalid_manual",
    "backend_unavailable",
    "backend_timeout",
    "internal",
];

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        debug_assert!(ERROR_CODES.contains(&code), "undocumented error code {code}");
        Self { http_status: status.as_u16(), code: code.into(), message: message.into() }
    }

    pub fn bad_request(code: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.http_status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

impl From<GatewayError> for ApiError {
    fn from(e: GatewayError) -> Self {
        match e {
            GatewayError::Timeout => Self::new(StatusCode::SERVICE_UNAVAILABLE, "backend_timeout", e.to_string()),
            GatewayError::BackendUnavailable(_) | GatewayError::MalformedBackendReply(_) => {
                Self::new(StatusCode::SERVICE_UNAVAILABLE, "backend_unavailable", e.to_string())
            }
            other => Self::internal(other.to_string()),
        }
    }
}

impl From<RouterError> for ApiError {
    fn from(e: RouterError) -> Self {
        match e {
            RouterError::EmptyUtterance => Self::bad_request("empty_utterance", e.to_string()),
            RouterError::UnknownZone(_) | RouterError::MissingZone => Self::bad_request("unknown_zone", e.to_string()),
            RouterError::UnknownDevice(_) => Self::bad_request("unknown_device", e.to_string()),
            RouterError::Gateway(g) => g.into(),
            RouterError::Inconsistent(m) => Self::internal(m),
        }
    }
}

impl From<FacilityError> for ApiError {
    fn from(e: FacilityError) -> Self {
        match e {
            FacilityError::Knowledge(k) => Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_manual", k.to_string()),
            other => Self::internal(other.to_string()),
        }
    }
}
