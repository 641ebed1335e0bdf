use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use crux::service::{api, FileStore, Service};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use super::{italian_pool, replay_gateway, science_paragraph};

pub fn app(dir: &tempfile::TempDir, fixture: &str) -> Router {
    let store = FileStore::open(dir.path()).unwrap();
    let service = Service::new(store, replay_gateway(fixture)).with_exemplar_pool(italian_pool());
    api::router(Arc::new(service))
}

pub async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(serde_json::to_vec(&v).unwrap())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
}

pub async fn call_json(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let (status, bytes) = call(app, method, uri, body).await;
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

pub async fn science_session(app: &Router) -> Value {
    let (status, session) =
        call_json(app, Method::POST, "/api/pipeline/text", Some(json!({ "document": science_paragraph() }))).await;
    assert_eq!(status, StatusCode::CREATED, "{session}");
    session
}

pub async fn set(app: &Router, session: &str, pair: &str, update: Value) -> (StatusCode, Value) {
    call_json(app, Method::PATCH, &format!("/api/sessions/{session}/pairs/{pair}"), Some(update)).await
}

/// Text session with four pairs accepted, p5 rejected, p3 left pending
/// and p6 preferred;
/// returns (session id, generate response).
pub async fn curated_generation(app: &Router) -> (String, Value) {
    let session = science_session(app).await;
    let id = session["session_id"].as_str().unwrap().to_string();
    for pair in ["p1", "p2", "p4", "p6"] {
        let (status, body) = set(app, &id, pair, json!({ "status": "accepted" })).await;
        assert_eq!(status, StatusCode::OK, "{body}");
    }
    assert_eq!(set(app, &id, "p5", json!({ "status": "rejected" })).await.0, StatusCode::OK);
    assert_eq!(set(app, &id, "p6", json!({ "preferred": true })).await.0, StatusCode::OK);
    let config = json!({ "config": { "seed": 42, "min_words": 3, "width": 12, "height": 12 } });
    let (status, result) = call_json(app, Method::POST, &format!("/api/sessions/{id}/generate"), Some(config)).await;
    assert_eq!(status, StatusCode::CREATED, "{result}");
    (id, result)
}
