//! JSON-over-HTTP front end: retrieval, human selection sessions,
//! generation and background evaluation jobs.

mod error;
mod handlers;
mod state;

use std::net::SocketAddr;
use std::sync::Arc;

use axum::routing::{get, post};
use axum::Router;

pub use error::ApiError;
pub use state::{AppState, Candidate, Job, JobStatus, Session, DEFAULT_SESSION_TTL};

/// Interactive generation samples fewer candidates than batch evaluation.
pub const DEFAULT_INTERACTIVE_SAMPLES: usize = 10;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(handlers::health))
        .route("/retrieve", post(handlers::retrieve))
        .route("/session", post(handlers::create_session))
        .route("/session/{id}", get(handlers::get_session))
        .route("/session/{id}/choice", post(handlers::submit_choice))
        .route("/generate", post(handlers::generate))
        .route("/evaluate", post(handlers::evaluate))
        .route("/jobs/{id}", get(handlers::get_job))
        .with_state(state)
}

pub async fn serve(addr: SocketAddr, state: Arc<AppState>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
