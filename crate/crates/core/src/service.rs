//! Local HTTP service under `/v1`.
//!
//! Request and response bodies are JSON; requests without
//! `Content-Type: application/json` are refused with 415. Client mistakes get
//! a 4xx body `{"error": ..., "fields": [...]}`; engine faults get a 500 with
//! an opaque id that also appears in the local log. The listener is bound
//! through a [`NetworkLayer`] and only to loopback unless a bearer token is
//! configured.

use std::net::SocketAddr;
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, Request, State};
use axum::http::{header, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::audit::{AuditRecord, UserResponse};
use crate::context::{EventKind, SessionEvent};
use crate::coordinator::Resolution;
use crate::curator::CuratedFeed;
use crate::engine::{AssessedPost, Detail, Engine, EngineError, EngineInput, EngineOutput, RecoveryCommand, USER_SCOPE};
use crate::integrity::IntegrityScore;
use crate::model::{ConfigError, FieldError, PostContent, UserConfig};
use crate::net::NetworkLayer;
use crate::recovery::{InboundDecision, InboundItem, RecoveryState};
use crate::rewriter::{DraftAnalysis, RewriteSuggestion};

pub type Clock = Arc<dyn Fn() -> i64 + Send + Sync>;

pub fn system_clock() -> Clock {
    Arc::new(|| SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as i64))
}

pub struct AppState {
    engine: Mutex<Engine>,
    clock: Clock,
    token: Option<String>,
}

impl AppState {
    pub fn new(engine: Engine, clock: Clock, token: Option<String>) -> Arc<Self> {
        Arc::new(Self { engine: Mutex::new(engine), clock, token })
    }
}

#[derive(Debug)]
pub enum ApiError {
    BadRequest(String),
    Validation(Vec<FieldError>),
    UnsupportedMedia(String),
    NotFound(String),
    Conflict(String),
    Unauthorized,
    Internal(uuid::Uuid),
}

impl ApiError {
    fn internal(e: &dyn std::fmt::Display) -> Self {
        let id = uuid::Uuid::new_v4();
        tracing::error!(%id, error = %e, "engine fault");
        ApiError::Internal(id)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, body) = match self {
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, json!({ "error": m, "fields": [] })),
            ApiError::Validation(fields) => {
                (StatusCode::UNPROCESSABLE_ENTITY, json!({ "error": "validation failed", "fields": fields }))
            }
            ApiError::UnsupportedMedia(m) => (StatusCode::UNSUPPORTED_MEDIA_TYPE, json!({ "error": m, "fields": [] })),
            ApiError::NotFound(m) => (StatusCode::NOT_FOUND, json!({ "error": m, "fields": [] })),
            ApiError::Conflict(m) => (StatusCode::CONFLICT, json!({ "error": m, "fields": [] })),
            ApiError::Unauthorized => (StatusCode::UNAUTHORIZED, json!({ "error": "missing or wrong bearer token", "fields": [] })),
            ApiError::Internal(id) => {
                (StatusCode::INTERNAL_SERVER_ERROR, json!({ "error": "internal error", "id": id.to_string() }))
            }
        };
        (status, Json(body)).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        match r {
            JsonRejection::MissingJsonContentType(e) => ApiError::UnsupportedMedia(e.body_text()),
            other => ApiError::BadRequest(other.body_text()),
        }
    }
}

fn field(name: &str, message: impl Into<String>) -> FieldError {
    FieldError { field: name.to_string(), message: message.into() }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        use crate::audit::AuditError;
        match e {
            EngineError::Config(ConfigError::Invalid(fields)) => ApiError::Validation(fields),
            EngineError::Config(ConfigError::Parse(m)) => ApiError::BadRequest(m),
            EngineError::Audit(AuditError::UnknownSeq(seq)) => ApiError::NotFound(format!("no audit record with seq {seq}")),
            EngineError::Audit(AuditError::ResponseAlreadySet(seq)) => {
                ApiError::Conflict(format!("response for seq {seq} is already set"))
            }
            EngineError::Audit(AuditError::NoneResponse) => ApiError::Validation(vec![field("response", "must not be none")]),
            EngineError::Recovery(e @ crate::recovery::RecoveryError::NotActive(_)) => ApiError::Conflict(e.to_string()),
            e if e.is_client_error() => ApiError::Validation(vec![field("events", e.to_string())]),
            e => ApiError::internal(&e),
        }
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

/// Runs `f` on the engine off the async executor; engine calls may block
/// on a configured rewrite provider.
async fn with_engine<R: Send + 'static>(
    state: &Arc<AppState>,
    f: impl FnOnce(&mut Engine, i64) -> Result<R, ApiError> + Send + 'static,
) -> Result<R, ApiError> {
    let state = Arc::clone(state);
    tokio::task::spawn_blocking(move || {
        let mut engine = state.engine.lock().map_err(|e| ApiError::internal(&e))?;
        let now = (state.clock)().max(engine.last_input_at().unwrap_or(i64::MIN));
        f(&mut engine, now)
    })
    .await
    .map_err(|e| ApiError::internal(&e))?
}

#[derive(Debug, Deserialize)]
pub struct AssessRequest {
    pub post: PostContent,
}

async fn assess(State(state): State<Arc<AppState>>, body: Result<Json<AssessRequest>, JsonRejection>) -> ApiResult<IntegrityScore> {
    let Json(req) = body?;
    with_engine(&state, move |e, _| Ok(e.assess(&req.post))).await.map(Json)
}

#[derive(Debug, Deserialize)]
pub struct EventBody {
    pub timestamp: i64,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Deserialize)]
pub struct EventsRequest {
    pub events: Vec<EventBody>,
}

#[derive(Debug, Serialize)]
pub struct EventsResponse {
    pub seqs: Vec<u64>,
    pub accepted: usize,
    pub resolution: Option<Resolution>,
}

fn resolution(out: &EngineOutput) -> Option<Resolution> {
    out.resolution.clone()
}

async fn session_events(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Result<Json<EventsRequest>, JsonRejection>,
) -> ApiResult<EventsResponse> {
    let Json(req) = body?;
    with_engine(&state, move |e, now| {
        let events: Vec<SessionEvent> =
            req.events.into_iter().map(|b| SessionEvent { session_id: id.clone(), timestamp: b.timestamp, kind: b.kind }).collect();
        let at = events.iter().map(|ev| ev.timestamp).max().unwrap_or(now).max(now);
        let out = e.apply(EngineInput::Events { session_id: id, at, events })?;
        let accepted = match &out.detail {
            Detail::Events { accepted, .. } => *accepted,
            _ => 0,
        };
        Ok(EventsResponse { seqs: out.seqs.clone(), accepted, resolution: resolution(&out) })
    })
    .await
    .map(Json)
}

#[derive(Debug, Deserialize)]
pub struct CurateRequest {
    #[serde(default)]
    pub session_id: Option<String>,
    pub posts: Vec<PostContent>,
}

#[derive(Debug, Serialize)]
pub struct CurateResponse {
    pub seqs: Vec<u64>,
    #[serde(flatten)]
    pub feed: CuratedFeed,
    pub integrity: Vec<AssessedPost>,
    pub locked: bool,
    pub resolution: Option<Resolution>,
}

async fn curate(State(state): State<Arc<AppState>>, body: Result<Json<CurateRequest>, JsonRejection>) -> ApiResult<CurateResponse> {
    let Json(req) = body?;
    with_engine(&state, move |e, now| {
        let session_id = req.session_id.unwrap_or_else(|| USER_SCOPE.to_string());
        let out = e.apply(EngineInput::FeedPage { session_id, at: now, posts: req.posts })?;
        let res = resolution(&out);
        match out.detail {
            Detail::Feed { feed, integrity, locked } => Ok(CurateResponse { seqs: out.seqs, feed, integrity, locked, resolution: res }),
            other => Err(ApiError::internal(&format!("unexpected detail {other:?}"))),
        }
    })
    .await
    .map(Json)
}

#[derive(Debug, Deserialize)]
pub struct DraftRequest {
    pub body: String,
    #[serde(default)]
    pub session_id: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct DraftResponse {
    pub seqs: Vec<u64>,
    pub analysis: DraftAnalysis,
    pub suggestions: Vec<RewriteSuggestion>,
    pub keep_original_available: bool,
    pub provider_fallback: bool,
    pub resolution: Option<Resolution>,
}

async fn draft(State(state): State<Arc<AppState>>, body: Result<Json<DraftRequest>, JsonRejection>) -> ApiResult<DraftResponse> {
    let Json(req) = body?;
    with_engine(&state, move |e, now| {
        let session_id = req.session_id.unwrap_or_else(|| USER_SCOPE.to_string());
        let out = e.apply(EngineInput::Draft { session_id, at: now, body: req.body })?;
        let res = resolution(&out);
        match out.detail {
            Detail::Draft { analysis, offer } => Ok(DraftResponse {
                seqs: out.seqs,
                analysis,
                provider_fallback: offer.as_ref().is_some_and(|o| o.provider_fallback),
                suggestions: offer.map(|o| o.suggestions).unwrap_or_default(),
                keep_original_available: true,
                resolution: res,
            }),
            other => Err(ApiError::internal(&format!("unexpected detail {other:?}"))),
        }
    })
    .await
    .map(Json)
}

async fn get_config(State(state): State<Arc<AppState>>) -> ApiResult<UserConfig> {
    with_engine(&state, |e, _| Ok(e.config().clone())).await.map(Json)
}

async fn put_config(State(state): State<Arc<AppState>>, body: Result<Json<serde_json::Value>, JsonRejection>) -> ApiResult<UserConfig> {
    let Json(value) = body?;
    // Parse through the same path as config files, so unknown fields and a
    // missing schema version are reported uniformly.
    let config = UserConfig::from_json(&value.to_string()).map_err(|e| match e {
        ConfigError::Invalid(f) => ApiError::Validation(f),
        ConfigError::Parse(m) => ApiError::BadRequest(m),
    })?;
    with_engine(&state, move |e, now| {
        e.apply(EngineInput::ConfigUpdate { at: now, config: Box::new(config) })?;
        Ok(e.config().clone())
    })
    .await
    .map(Json)
}

#[derive(Debug, Serialize)]
pub struct RecoveryResponse {
    pub seqs: Vec<u64>,
    #[serde(flatten)]
    pub state: RecoveryState,
}

async fn recovery(State(state): State<Arc<AppState>>, Path(action): Path<String>) -> ApiResult<RecoveryResponse> {
    let command = match action.as_str() {
        "activate" => RecoveryCommand::Activate,
        "deactivate" => RecoveryCommand::Deactivate,
        "decline" => RecoveryCommand::Decline,
        other => return Err(ApiError::NotFound(format!("unknown recovery action {other:?}"))),
    };
    with_engine(&state, move |e, now| {
        let out = e.apply(EngineInput::Recovery { at: now, command })?;
        Ok(RecoveryResponse { seqs: out.seqs, state: e.recovery().state.clone() })
    })
    .await
    .map(Json)
}

#[derive(Debug, Deserialize)]
pub struct InboundRequest {
    pub item: InboundItem,
}

#[derive(Debug, Serialize)]
pub struct InboundResponse {
    pub seqs: Vec<u64>,
    pub toxicity: f64,
    pub decision: Option<InboundDecision>,
    pub resolution: Option<Resolution>,
}

async fn inbound(State(state): State<Arc<AppState>>, body: Result<Json<InboundRequest>, JsonRejection>) -> ApiResult<InboundResponse> {
    let Json(req) = body?;
    with_engine(&state, move |e, now| {
        let out = e.apply(EngineInput::Inbound { at: now, item: req.item })?;
        let res = resolution(&out);
        match out.detail {
            Detail::Inbound { toxicity, decision } => Ok(InboundResponse { seqs: out.seqs, toxicity, decision, resolution: res }),
            other => Err(ApiError::internal(&format!("unexpected detail {other:?}"))),
        }
    })
    .await
    .map(Json)
}

#[derive(Debug, Deserialize)]
pub struct SinceQuery {
    #[serde(default)]
    pub since: u64,
}

async fn audit(State(state): State<Arc<AppState>>, Query(q): Query<SinceQuery>) -> ApiResult<Vec<AuditRecord>> {
    with_engine(&state, move |e, _| Ok(e.audit().since(q.since).to_vec())).await.map(Json)
}

#[derive(Debug, Deserialize)]
pub struct ResponseRequest {
    pub response: UserResponse,
}

#[derive(Debug, Serialize)]
pub struct ResponseAck {
    pub seq: u64,
    pub user_response: UserResponse,
}

async fn audit_response(
    State(state): State<Arc<AppState>>,
    Path(seq): Path<u64>,
    body: Result<Json<ResponseRequest>, JsonRejection>,
) -> ApiResult<ResponseAck> {
    let Json(req) = body?;
    with_engine(&state, move |e, now| {
        e.apply(EngineInput::Response { at: now, seq, response: req.response })?;
        Ok(ResponseAck { seq, user_response: req.response })
    })
    .await
    .map(Json)
}

async fn require_token(State(state): State<Arc<AppState>>, req: Request, next: Next) -> Response {
    if let Some(token) = &state.token {
        let ok = req
            .headers()
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .is_some_and(|t| t == token);
        if !ok {
            return ApiError::Unauthorized.into_response();
        }
    }
    next.run(req).await
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/v1/assess", post(assess))
        .route("/v1/session/{id}/events", post(session_events))
        .route("/v1/feed/curate", post(curate))
        .route("/v1/draft/analyze", post(draft))
        .route("/v1/config", get(get_config).put(put_config))
        .route("/v1/recovery/{action}", post(recovery))
        .route("/v1/inbound", post(inbound))
        .route("/v1/audit", get(audit))
        .route("/v1/audit/{seq}/response", post(audit_response))
        .layer(middleware::from_fn_with_state(Arc::clone(&state), require_token))
        .with_state(state)
}

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("refusing to bind non-loopback address {0} without a bearer token")]
    NeedsToken(SocketAddr),
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        #[source]
        source: std::io::Error,
    },
    #[error("server failed: {0}")]
    Io(#[from] std::io::Error),
}

/// Binds `addr` through `net`, refusing non-loopback addresses without a
/// token.
pub fn bind(addr: SocketAddr, token: Option<&str>, net: &dyn NetworkLayer) -> Result<tokio::net::TcpListener, ServeError> {
    if !addr.ip().is_loopback() && token.is_none() {
        return Err(ServeError::NeedsToken(addr));
    }
    let std_listener = net.bind(addr).map_err(|source| ServeError::Bind { addr, source })?;
    std_listener.set_nonblocking(true)?;
    Ok(tokio::net::TcpListener::from_std(std_listener)?)
}

pub async fn serve(listener: tokio::net::TcpListener, state: Arc<AppState>) -> Result<(), ServeError> {
    tracing::info!(addr = ?listener.local_addr().ok(), "serving");
    axum::serve(listener, router(state)).await?;
    Ok(())
}
