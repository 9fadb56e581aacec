use std::path::PathBuf;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use xconv::server::{router, Config};
use xconv_core::{load_model, Closure, SearchBounds};

fn fixture_text(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name);
    std::fs::read_to_string(path).unwrap()
}

fn app_with(default_model: bool, persist_dir: Option<PathBuf>, cors_origin: Option<String>) -> Router {
    router(Config {
        default_model: default_model.then(|| load_model(&fixture_text("chatbot.json"), Closure::Close).unwrap()),
        bounds: SearchBounds::default(),
        cors_origin,
        persist_dir,
    })
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let v = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, v)
}

fn chain(bits: &[u8]) -> Value {
    bits.iter().fold(Value::Null, |acc, b| {
        if acc.is_null() {
            json!({"bit": b, "premises": []})
        } else {
            json!({"bit": b, "premises": [acc]})
        }
    })
}

#[tokio::test]
async fn chatbot_session_over_http() {
    let app = app_with(true, None, None);
    let (s, v) = call(&app, "POST", "/sessions", Some(json!({"world": "w0", "claim": "drink_water"}))).await;
    assert_eq!(s, StatusCode::CREATED);
    let id = v["id"].as_str().unwrap().to_string();
    assert_eq!(v["round"], 0);
    assert_eq!(v["status"], Value::Null);
    assert_eq!(v["pending"]["premises"][0]["claim"], "fluid_loss");

    let fb = format!("/sessions/{id}/feedback");
    let (s, v) = call(&app, "POST", &fb, Some(json!({"round": 0, "bits": chain(&[1, 0, 0])}))).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["round"], 1);
    assert_eq!(v["pending"]["premises"][0]["claim"], "thirsty");

    let (s, _) = call(&app, "POST", &fb, Some(json!({"round": 0, "bits": chain(&[1, 1, 1])}))).await;
    assert_eq!(s, StatusCode::CONFLICT);

    let (s, v) = call(&app, "POST", &fb, Some(json!({"round": 1, "bits": chain(&[1, 1, 1])}))).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["status"], "JustifiedByExplainee");
    assert_eq!(v["history"].as_array().unwrap().len(), 2);

    let (s, _) = call(&app, "POST", &fb, Some(json!({"round": 2, "bits": chain(&[1, 1, 1])}))).await;
    assert_eq!(s, StatusCode::CONFLICT);

    let (s, t) = call(&app, "GET", &format!("/sessions/{id}/transcript"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(t["final_term"], "r . (s . t)");
    assert_eq!(t["rounds"][0]["feedback"], chain(&[1, 0, 0]));

    let (s, v) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["id"], id.as_str());
}

#[tokio::test]
async fn malformed_feedback_reports_its_path() {
    let app = app_with(true, None, None);
    let (_, v) = call(&app, "POST", "/sessions", Some(json!({"world": "w0", "claim": "drink_water"}))).await;
    let fb = format!("/sessions/{}/feedback", v["id"].as_str().unwrap());

    let (s, v) = call(&app, "POST", &fb, Some(json!({"round": 0, "bits": chain(&[0, 1, 1])}))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["path"], json!([0, 0]));

    let (s, v) = call(&app, "POST", &fb, Some(json!({"round": 0, "bits": chain(&[1, 2, 1])}))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["path"], json!([0]));

    let (s, _) = call(&app, "POST", &fb, Some(json!({"round": 0, "bits": {"bit": 1}}))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);

    let (s, _) = call(&app, "POST", &fb, Some(json!({"round": 0}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);

    // Rejections leave the session where it was.
    let (s, v) = call(&app, "POST", &fb, Some(json!({"round": 0, "bits": chain(&[1, 0, 0])}))).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["round"], 1);
}

#[tokio::test]
async fn creation_errors() {
    let app = app_with(false, None, None);
    let (s, v) = call(&app, "POST", "/sessions", Some(json!({"world": "w0", "claim": "drink_water"}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST, "{v}");

    let model: Value = serde_json::from_str(&fixture_text("chatbot.json")).unwrap();
    let body = json!({"world": "w0", "claim": "drink_water", "model": model});
    let (s, _) = call(&app, "POST", "/sessions", Some(body)).await;
    assert_eq!(s, StatusCode::CREATED);

    let (s, v) = call(&app, "POST", "/sessions", Some(json!({"world": "w0", "claim": "(drink", "model": model}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert!(v["error"].as_str().unwrap().contains("offset"));

    let (s, _) = call(&app, "POST", "/sessions", Some(json!({"world": "w9", "claim": "drink_water", "model": model}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);

    let bad: Value = serde_json::from_str(&fixture_text("jyb_violation.json")).unwrap();
    let (s, v) = call(&app, "POST", "/sessions", Some(json!({"world": "u", "claim": "a", "model": bad}))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(!v["violations"].as_array().unwrap().is_empty());

    let (s, _) = call(&app, "GET", "/sessions/0000", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (s, _) = call(&app, "POST", "/sessions/0000/feedback", Some(json!({}))).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn untruthful_feedback_finishes_the_session() {
    let app = app_with(true, None, None);
    let (_, v) = call(&app, "POST", "/sessions", Some(json!({"world": "w0", "claim": "drink_water"}))).await;
    let id = v["id"].as_str().unwrap().to_string();
    let (s, v) = call(&app, "POST", &format!("/sessions/{id}/feedback"), Some(json!({"round": 0, "bits": chain(&[1, 1, 1])}))).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["status"], "UntruthfulFeedbackDetected");
    assert_eq!(v["pending"], Value::Null);
}

#[tokio::test]
async fn transcripts_are_persisted() {
    let dir = std::env::temp_dir().join(format!("xconv-http-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let app = app_with(true, Some(dir.clone()), None);
    let (_, v) = call(&app, "POST", "/sessions", Some(json!({"world": "w0", "claim": "drink_water"}))).await;
    let id = v["id"].as_str().unwrap().to_string();
    call(&app, "POST", &format!("/sessions/{id}/feedback"), Some(json!({"round": 0, "bits": chain(&[1, 0, 0])}))).await;
    let saved: Value = serde_json::from_str(&std::fs::read_to_string(dir.join(format!("{id}.json"))).unwrap()).unwrap();
    assert_eq!(saved["rounds"].as_array().unwrap().len(), 1);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[tokio::test]
async fn cors_header_for_configured_origin() {
    let app = app_with(true, None, Some("http://localhost:5173".into()));
    let req = Request::builder()
        .method("GET")
        .uri("/sessions/none")
        .header("origin", "http://localhost:5173")
        .body(Body::empty())
        .unwrap();
    let resp = app.oneshot(req).await.unwrap();
    assert_eq!(resp.headers()["access-control-allow-origin"], "http://localhost:5173");
}
