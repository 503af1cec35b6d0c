//! HTTP front end over a loaded artifact directory.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use axum::extract::rejection::QueryRejection;
use axum::extract::{Query, Request, State};
use axum::http::StatusCode;
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use qsuggest_core::store::LoadedEngine;
use qsuggest_core::suggest::{SuggestError, SuggestOptions};
use serde_json::json;

use crate::commands::answer;

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub bind: SocketAddr,
    pub artifacts: PathBuf,
    /// Defaults for requests that do not say otherwise.
    pub k: usize,
    pub m: usize,
    pub enrich_long_tail: bool,
    pub request_log: bool,
}

#[derive(Clone)]
pub struct AppState {
    engine: Option<Arc<LoadedEngine>>,
    defaults: SuggestOptions,
}

impl AppState {
    pub fn new(engine: Option<Arc<LoadedEngine>>, defaults: SuggestOptions) -> Self {
        Self { engine, defaults }
    }
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(json!({ "error": message.into() }))).into_response()
}

fn internal(err: impl std::fmt::Display) -> Response {
    let id = uuid::Uuid::new_v4();
    log::error!("request {id} failed: {err}");
    (
        StatusCode::INTERNAL_SERVER_ERROR,
        Json(json!({ "error": "internal error", "id": id.to_string() })),
    )
        .into_response()
}

fn positive(params: &HashMap<String, String>, name: &str, default: usize) -> Result<usize, String> {
    match params.get(name) {
        None => Ok(default),
        Some(raw) => match raw.parse::<usize>() {
            Ok(v) if v >= 1 => Ok(v),
            _ => Err(format!("{name} must be a positive integer")),
        },
    }
}

async fn suggest(
    State(state): State<AppState>,
    params: Result<Query<HashMap<String, String>>, QueryRejection>,
) -> Response {
    let Ok(Query(params)) = params else {
        return error(StatusCode::BAD_REQUEST, "malformed query string");
    };
    let q = match params.get("q") {
        Some(q) if !q.trim().is_empty() => q.clone(),
        _ => return error(StatusCode::BAD_REQUEST, "missing query parameter q"),
    };
    let opts = match (
        positive(&params, "k", state.defaults.k),
        positive(&params, "m", state.defaults.m),
    ) {
        (Ok(k), Ok(m)) => SuggestOptions { k, m, ..state.defaults },
        (Err(msg), _) | (_, Err(msg)) => return error(StatusCode::BAD_REQUEST, msg),
    };
    let Some(engine) = state.engine else {
        return error(StatusCode::SERVICE_UNAVAILABLE, "engine not loaded");
    };
    // Scans are CPU-bound; keep them off the async workers.
    let result = tokio::task::spawn_blocking(move || answer(&engine, &q, opts)).await;
    match result {
        Ok(Ok(report)) => Json(report).into_response(),
        Ok(Err(SuggestError::Unclassifiable)) => {
            error(StatusCode::BAD_REQUEST, "query has no searchable terms")
        }
        Ok(Err(e)) => internal(e),
        Err(e) => internal(e),
    }
}

async fn healthz(State(state): State<AppState>) -> Response {
    match state.engine {
        Some(engine) => Json(json!({
            "status": "ok",
            "manifest_sha256": engine.manifest_digest,
            "format_version": engine.manifest.format_version,
        }))
        .into_response(),
        None => error(StatusCode::SERVICE_UNAVAILABLE, "engine not loaded"),
    }
}

async fn log_request(req: Request, next: Next) -> Response {
    let (method, uri) = (req.method().clone(), req.uri().clone());
    let started = Instant::now();
    let resp = next.run(req).await;
    log::info!(
        "{method} {uri} {} {:.1}ms",
        resp.status().as_u16(),
        started.elapsed().as_secs_f64() * 1e3
    );
    resp
}

pub fn router(state: AppState, request_log: bool) -> Router {
    let app = Router::new()
        .route("/suggest", get(suggest))
        .route("/healthz", get(healthz))
        .with_state(state);
    if request_log {
        app.layer(middleware::from_fn(log_request))
    } else {
        app
    }
}

/// Serves until interrupted. Without an engine every request gets 503.
pub async fn serve(config: ServeConfig, engine: Option<Arc<LoadedEngine>>) -> std::io::Result<()> {
    let defaults = SuggestOptions {
        k: config.k,
        m: config.m,
        enrich_long_tail: config.enrich_long_tail,
    };
    let app = router(AppState::new(engine, defaults), config.request_log);
    let listener = tokio::net::TcpListener::bind(config.bind).await?;
    log::info!("listening on {} for {}", listener.local_addr()?, config.artifacts.display());
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
