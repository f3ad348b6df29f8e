//! `/v1` HTTP handlers.

use std::collections::BTreeMap;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use factsearch_core::gateway::Role;
use factsearch_core::retrieval::Mode;
use serde::{Deserialize, Serialize};

use crate::pipeline::{Pipeline, VerifyError};
use crate::AppState;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyRequest {
    pub claim: String,
    #[serde(default)]
    pub mode: Option<Mode>,
    #[serde(default)]
    pub k: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub ready: bool,
    pub corpus_loaded: bool,
    pub corpus_paragraphs: usize,
    pub index_ready: bool,
    pub index_documents: usize,
    pub backends: BTreeMap<String, bool>,
    pub scaler_t: Option<f64>,
}

struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, error: impl Into<String>) -> Self {
        ApiError {
            status,
            body: ErrorBody {
                error: error.into(),
                role: None,
            },
        }
    }

    fn not_ready() -> Self {
        ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "service is initializing")
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<VerifyError> for ApiError {
    fn from(e: VerifyError) -> Self {
        match &e {
            VerifyError::EmptyClaim | VerifyError::InvalidRequest(_) => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string())
            }
            VerifyError::Backend(_) => ApiError {
                status: StatusCode::BAD_GATEWAY,
                body: ErrorBody {
                    error: e.to_string(),
                    role: e.role().map(|r| r.as_str().to_string()),
                },
            },
        }
    }
}

pub fn routes(state: AppState) -> Router {
    Router::new()
        .route("/v1/verify", post(verify))
        .route("/v1/document/{page_id}", get(document))
        .route("/v1/health", get(health))
        .with_state(state)
}

fn ready(state: &AppState) -> Result<Arc<Pipeline>, ApiError> {
    state.pipeline().ok_or_else(ApiError::not_ready)
}

async fn verify(State(state): State<AppState>, body: Result<Json<VerifyRequest>, JsonRejection>) -> Response {
    let result = async {
        let pipeline = ready(&state)?;
        let Json(req) = body.map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.body_text()))?;
        if req.claim.trim().is_empty() {
            return Err(VerifyError::EmptyClaim.into());
        }
        tokio::task::spawn_blocking(move || pipeline.verify(&req.claim, req.mode, req.k))
            .await
            .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
            .map_err(ApiError::from)
    }
    .await;
    match result {
        Ok(resp) => Json(resp).into_response(),
        Err(e) => e.into_response(),
    }
}

async fn document(State(state): State<AppState>, Path(page_id): Path<String>) -> Response {
    let pipeline = match ready(&state) {
        Ok(p) => p,
        Err(e) => return e.into_response(),
    };
    match pipeline.document(&page_id) {
        Some(doc) => Json(doc).into_response(),
        None => ApiError::new(StatusCode::NOT_FOUND, format!("unknown page {page_id}")).into_response(),
    }
}

async fn health(State(state): State<AppState>) -> Json<Health> {
    let Some(p) = state.pipeline() else {
        return Json(Health {
            ready: false,
            corpus_loaded: false,
            corpus_paragraphs: 0,
            index_ready: false,
            index_documents: 0,
            backends: Role::ALL.iter().map(|r| (r.as_str().to_string(), false)).collect(),
            scaler_t: None,
        });
    };
    // remote probes block on the network
    let backends = tokio::task::spawn_blocking({
        let p = p.clone();
        move || {
            Role::ALL
                .iter()
                .map(|&r| (r.as_str().to_string(), p.gateway.reachable(r)))
                .collect::<BTreeMap<_, _>>()
        }
    })
    .await
    .unwrap_or_default();
    Json(Health {
        ready: true,
        corpus_loaded: true,
        corpus_paragraphs: p.corpus.len(),
        index_ready: true,
        index_documents: p.index.doc_count(),
        backends,
        scaler_t: Some(p.scaler.temperature()),
    })
}
