//! FactSearch HTTP service.
//!
//! `POST /v1/verify` retrieves evidence for a claim and returns, per
//! paragraph, a calibrated NLI verdict, highlight spans and a document link.
//! `GET /v1/document/{page_id}` serves a full page and `GET /v1/health`
//! reports readiness. Until the pipeline has been loaded, verify and document
//! requests answer 503.

pub mod api;
pub mod config;
pub mod pipeline;

use std::net::SocketAddr;
use std::sync::{Arc, RwLock};

use axum::Router;

pub use api::{ErrorBody, Health, VerifyRequest};
pub use config::ServiceConfig;
pub use pipeline::{group_by_page, Document, Pipeline, VerifyError, VerifyResponse, VerifyResult};

/// Shared handle to the (possibly not yet loaded) pipeline.
#[derive(Clone, Default)]
pub struct AppState {
    pipeline: Arc<RwLock<Option<Arc<Pipeline>>>>,
}

impl AppState {
    pub fn uninitialized() -> Self {
        AppState::default()
    }

    pub fn ready(pipeline: Pipeline) -> Self {
        let state = AppState::default();
        state.set_pipeline(pipeline);
        state
    }

    pub fn set_pipeline(&self, pipeline: Pipeline) {
        *self.pipeline.write().unwrap_or_else(|e| e.into_inner()) = Some(Arc::new(pipeline));
    }

    pub fn pipeline(&self) -> Option<Arc<Pipeline>> {
        self.pipeline.read().unwrap_or_else(|e| e.into_inner()).clone()
    }
}

pub fn router(state: AppState) -> Router {
    api::routes(state)
}

/// Binds `addr`, starts answering immediately and loads the pipeline in the
/// background. A failed load is logged and leaves the service unready.
pub async fn serve(cfg: ServiceConfig, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    let state = AppState::uninitialized();
    let loader = state.clone();
    tokio::task::spawn_blocking(move || match Pipeline::load(&cfg) {
        Ok(p) => {
            tracing::info!(paragraphs = p.corpus.len(), "pipeline ready");
            loader.set_pipeline(p);
        }
        Err(e) => tracing::error!(error = %e, "pipeline failed to load"),
    });
    axum::serve(listener, router(state)).await
}
