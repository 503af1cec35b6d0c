mod common;

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use qsuggest_cli::render::Report;
use qsuggest_cli::service::{router, AppState};
use qsuggest_core::store::load_engine;
use qsuggest_core::SuggestOptions;
use tower::ServiceExt;

async fn get(app: axum::Router, uri: &str) -> (StatusCode, serde_json::Value) {
    let resp = app
        .oneshot(Request::get(uri).body(Body::empty()).unwrap())
        .await
        .unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap())
}

fn fixture_app() -> (tempfile::TempDir, axum::Router, String) {
    let dir = tempfile::tempdir().unwrap();
    common::build_fixture(dir.path(), 800, 7);
    let loaded = load_engine(dir.path().join("art")).unwrap();
    let digest = loaded.manifest_digest.clone();
    let app = router(AppState::new(Some(Arc::new(loaded)), SuggestOptions::default()), true);
    (dir, app, digest)
}

#[tokio::test]
async fn healthz_reports_manifest_digest() {
    let (_dir, app, digest) = fixture_app();
    let (status, body) = get(app, "/healthz").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["manifest_sha256"], digest.as_str());
    assert_eq!(digest.len(), 64);
}

#[tokio::test]
async fn suggest_returns_report_json() {
    let (_dir, app, _) = fixture_app();
    let (status, body) = get(app.clone(), "/suggest?q=java&k=3").await;
    assert_eq!(status, StatusCode::OK);
    let report: Report = serde_json::from_value(body.clone()).unwrap();
    assert_eq!(report.query, "java");
    assert!(report.suggestions.len() <= 3);
    for key in ["query", "class", "long_tail", "via", "suggestions"] {
        assert!(body.get(key).is_some(), "missing {key}");
    }

    let (status, body) = get(app, "/suggest?q=%E5%AE%89%E8%A3%85%20zzz").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["query"], "安 装 zzz");
}

#[tokio::test]
async fn malformed_requests_get_400() {
    let (_dir, app, _) = fixture_app();
    for uri in [
        "/suggest",
        "/suggest?q=",
        "/suggest?k=3",
        "/suggest?q=java&k=0",
        "/suggest?q=java&k=ten",
        "/suggest?q=java&m=-1",
        "/suggest?q=%3F%21",
    ] {
        let (status, body) = get(app.clone(), uri).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{uri}");
        assert!(body["error"].is_string(), "{uri}");
    }
}

#[tokio::test]
async fn missing_engine_gives_503() {
    let app = router(AppState::new(None, SuggestOptions::default()), false);
    assert_eq!(get(app.clone(), "/suggest?q=java").await.0, StatusCode::SERVICE_UNAVAILABLE);
    assert_eq!(get(app, "/healthz").await.0, StatusCode::SERVICE_UNAVAILABLE);
}
