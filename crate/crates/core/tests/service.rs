mod common;

use std::io::{Read, Write};
use std::sync::Arc;

use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use mediator::net::{OfflineNetwork, RecordingNetwork};
use mediator::service::{self, AppState, ServeError};
use mediator::{Engine, UserConfig};
use serde_json::{json, Value};
use tower::ServiceExt;

const NOW: i64 = 1_750_000_000_000;

fn app_with(config: UserConfig, token: Option<&str>) -> Router {
    let engine = Engine::new(config).unwrap();
    service::router(AppState::new(engine, Arc::new(|| NOW), token.map(str::to_string)))
}

fn app() -> Router {
    app_with(UserConfig::default(), None)
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header(header::CONTENT_TYPE, "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, value)
}

fn post(id: &str, author: &str, category: &str, body: &str) -> Value {
    json!({ "post_id": id, "author_id": author, "category": category, "body": body })
}

#[tokio::test]
async fn out_of_range_tau_is_a_field_error() {
    let app = app();
    let (status, body) = call(&app, "PUT", "/v1/config", Some(json!({ "schema_version": 1, "tau": 1.5 }))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["fields"][0]["field"], "tau");
    let (_, cfg) = call(&app, "GET", "/v1/config", None).await;
    assert_eq!(cfg["tau"], 0.6);
}

#[tokio::test]
async fn fresh_audit_is_empty() {
    let (status, body) = call(&app(), "GET", "/v1/audit?since=0", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, json!([]));
}

#[tokio::test]
async fn assess_reports_fact_score() {
    let app = app_with(common::fact_config(), None);
    let fixture = common::annotated_posts().into_iter().find(|p| p.expected_claims == 3 && p.expected_conflicts == 1).unwrap();
    let (status, body) = call(&app, "POST", "/v1/assess", Some(json!({ "post": fixture.post }))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["total_claims"], 3);
    assert_eq!(body["conflicts"], 1);
    assert!((body["s_fact"].as_f64().unwrap() - 0.6667).abs() < 1e-4);
    assert!(!body["explanations"]["fact"].as_str().unwrap().is_empty());
}

#[tokio::test]
async fn wrong_content_type_is_415() {
    let req = Request::builder().method("POST").uri("/v1/assess").body(Body::from("{}")).unwrap();
    let resp = app().oneshot(req).await.unwrap();
    assert_eq!(resp.status(), StatusCode::UNSUPPORTED_MEDIA_TYPE);
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let v: Value = serde_json::from_slice(&bytes).unwrap();
    assert!(v["error"].is_string());
}

#[tokio::test]
async fn malformed_json_is_400() {
    let req = Request::builder()
        .method("POST")
        .uri("/v1/assess")
        .header(header::CONTENT_TYPE, "application/json")
        .body(Body::from("{not json"))
        .unwrap();
    assert_eq!(app().oneshot(req).await.unwrap().status(), StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn events_are_audited_before_the_reply() {
    let app = app();
    let events = json!({ "events": [
        { "type": "session_start", "timestamp": NOW - 60_000 },
        { "type": "scroll", "timestamp": NOW - 30_000, "delta_px": 4000.0 },
    ]});
    let (status, body) = call(&app, "POST", "/v1/session/s1/events", Some(events)).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["accepted"], 2);
    let seq = body["seqs"][0].as_u64().unwrap();
    let (_, audit) = call(&app, "GET", "/v1/audit?since=0", None).await;
    let rec = audit.as_array().unwrap().iter().find(|r| r["seq"] == seq).unwrap();
    assert_eq!(rec["session_id"], "s1");
    assert_eq!(rec["trigger"], "event_batch");
}

#[tokio::test]
async fn response_errors_are_404_and_409() {
    let app = app();
    let (status, _) = call(&app, "POST", "/v1/audit/99/response", Some(json!({ "response": "accepted" }))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let (_, draft) = call(&app, "POST", "/v1/draft/analyze", Some(json!({ "body": "You are ALWAYS so stupid" }))).await;
    let seq = draft["seqs"][0].as_u64().unwrap();
    let uri = format!("/v1/audit/{seq}/response");
    let (status, _) = call(&app, "POST", &uri, Some(json!({ "response": "overridden" }))).await;
    assert_eq!(status, StatusCode::OK);
    let (status, _) = call(&app, "POST", &uri, Some(json!({ "response": "accepted" }))).await;
    assert_eq!(status, StatusCode::CONFLICT);
}

#[tokio::test]
async fn token_is_enforced() {
    let app = app_with(UserConfig::default(), Some("s3cret"));
    let (status, _) = call(&app, "GET", "/v1/config", None).await;
    assert_eq!(status, StatusCode::UNAUTHORIZED);
    let req = Request::builder()
        .uri("/v1/config")
        .header(header::AUTHORIZATION, "Bearer s3cret")
        .body(Body::empty())
        .unwrap();
    assert_eq!(app.oneshot(req).await.unwrap().status(), StatusCode::OK);
}

#[tokio::test]
async fn unknown_recovery_action_is_404() {
    let (status, _) = call(&app(), "POST", "/v1/recovery/unknown", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[test]
fn non_loopback_bind_requires_token() {
    let net = RecordingNetwork::new(Arc::new(OfflineNetwork));
    let err = service::bind("0.0.0.0:8787".parse().unwrap(), None, &net).unwrap_err();
    assert!(matches!(err, ServeError::NeedsToken(_)));
    assert!(net.ops().is_empty());
}

#[test]
fn serves_over_loopback_socket() {
    let rt = tokio::runtime::Runtime::new().unwrap();
    let net = RecordingNetwork::system();
    let listener = rt.block_on(async { service::bind("127.0.0.1:0".parse().unwrap(), None, &net) }).unwrap();
    let addr = listener.local_addr().unwrap();
    let state = AppState::new(Engine::new(UserConfig::default()).unwrap(), service::system_clock(), None);
    rt.spawn(service::serve(listener, state));

    let mut stream = std::net::TcpStream::connect(addr).unwrap();
    write!(stream, "GET /v1/audit?since=0 HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n").unwrap();
    let mut reply = String::new();
    stream.read_to_string(&mut reply).unwrap();
    assert!(reply.starts_with("HTTP/1.1 200"), "{reply}");
    assert!(reply.ends_with("[]"), "{reply}");
    assert!(net.non_loopback_ops().is_empty());
    assert_eq!(net.ops().len(), 1);
}

/// The control panel's three round trips: a slider save hides a category, a
/// declined rewrite is audited as overridden, recovery hides toxic inbound.
#[tokio::test]
async fn panel_round_trip() {
    let app = app();
    let (_, mut cfg) = call(&app, "GET", "/v1/config", None).await;
    cfg["intensities"]["sports"] = json!(0.0);
    let (status, saved) = call(&app, "PUT", "/v1/config", Some(cfg)).await;
    assert_eq!(status, StatusCode::OK, "{saved}");
    assert_eq!(saved["intensities"]["sports"], 0.0);

    let posts = json!({ "posts": [
        post("a", "u1", "sports", "The match ended in a draw."),
        post("b", "u2", "news", "The council met on Tuesday."),
        post("c", "u3", "sports", "Transfer window opens soon."),
    ]});
    let (status, feed) = call(&app, "POST", "/v1/feed/curate", Some(posts)).await;
    assert_eq!(status, StatusCode::OK, "{feed}");
    let hidden = feed["hidden"].as_array().unwrap();
    assert_eq!(hidden.len(), 2);
    for h in hidden {
        assert!(h["explanation"].as_str().unwrap().contains("sports"));
    }
    assert_eq!(feed["visible"][0]["post_id"], "b");

    let (_, draft) = call(&app, "POST", "/v1/draft/analyze", Some(json!({ "body": "You NEVER listen, you idiot" }))).await;
    assert!(draft["keep_original_available"].as_bool().unwrap());
    assert!(!draft["suggestions"].as_array().unwrap().is_empty());
    let seq = draft["seqs"][0].as_u64().unwrap();
    let (status, _) =
        call(&app, "POST", &format!("/v1/audit/{seq}/response"), Some(json!({ "response": "overridden" }))).await;
    assert_eq!(status, StatusCode::OK);
    let (_, audit) = call(&app, "GET", &format!("/v1/audit?since={}", seq - 1), None).await;
    assert_eq!(audit[0]["seq"], seq);
    assert_eq!(audit[0]["user_response"], "overridden");

    let (status, state) = call(&app, "POST", "/v1/recovery/activate", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(state["phase"], "active");
    let item = json!({ "item": {
        "item_id": "m1", "sender_id": "stranger", "channel": "reply",
        "body": "you are a worthless pathetic idiot loser", "toxicity": 0.95
    }});
    let (status, inbound) = call(&app, "POST", "/v1/inbound", Some(item)).await;
    assert_eq!(status, StatusCode::OK, "{inbound}");
    assert_eq!(inbound["decision"], "hide");
}
