//! HTTP/JSON service over a shared, immutable store.

use std::convert::Infallible;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::{Body, Bytes};
use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use forge_core::MeasureSettings;
use forge_store::{QueryOptions, Store};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::json;
use tokio::sync::mpsc;

use crate::api::{self, ApiError, ApiMatch, ApiQueryRequest, ApiQueryResponse, MetricsRequest};

pub const DEFAULT_QUERY_CAP: Duration = Duration::from_secs(60);
pub const NDJSON: &str = "application/x-ndjson";

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<Store>,
    pub settings: MeasureSettings,
    /// Wall-time cap for one query; partial results are flagged truncated.
    pub query_cap: Duration,
}

impl AppState {
    pub fn new(store: Arc<Store>) -> Self {
        Self { store, settings: MeasureSettings::default(), query_cap: DEFAULT_QUERY_CAP }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/query", post(query))
        .route("/api/metrics", post(metrics))
        .route("/api/regex/{id}", get(regex))
        .with_state(state)
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(json!({ "error": message.into() }))).into_response()
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match self {
            ApiError::Invalid(_) => StatusCode::BAD_REQUEST,
            ApiError::Unparseable(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ApiError::NotFound(_) => StatusCode::NOT_FOUND,
        };
        error(status, self.to_string())
    }
}

fn body<T: DeserializeOwned>(bytes: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(bytes).map_err(|e| ApiError::Invalid(format!("invalid request body: {e}")))
}

/// Sets the flag when dropped, which is how an abandoned request stops its
/// scan.
struct CancelOnDrop(Arc<AtomicBool>);

impl Drop for CancelOnDrop {
    fn drop(&mut self) {
        self.0.store(true, Ordering::Relaxed);
    }
}

async fn health(State(s): State<AppState>) -> Json<api::Health> {
    Json(api::health(&s.store))
}

async fn regex(State(s): State<AppState>, Path(id): Path<String>) -> Result<Json<api::ApiEntry>, ApiError> {
    api::lookup(&s.store, &id).map(Json)
}

async fn metrics(State(s): State<AppState>, bytes: Bytes) -> Response {
    let req: MetricsRequest = match body(&bytes) {
        Ok(r) => r,
        Err(e) => return e.into_response(),
    };
    let settings = s.settings;
    match tokio::task::spawn_blocking(move || api::compare(&req, &settings)).await {
        Ok(Ok(r)) => Json(r).into_response(),
        Ok(Err(e)) => e.into_response(),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

fn wants_stream(headers: &HeaderMap) -> bool {
    headers.get(header::ACCEPT).and_then(|v| v.to_str().ok()).is_some_and(|v| v.contains(NDJSON))
}

async fn query(State(s): State<AppState>, headers: HeaderMap, bytes: Bytes) -> Response {
    let req: ApiQueryRequest = match body(&bytes) {
        Ok(r) => r,
        Err(e) => return e.into_response(),
    };
    // Reject invariant violations before any scan starts.
    if let Err(e) = api::to_query(&req) {
        return e.into_response();
    }
    if wants_stream(&headers) {
        stream_query(s, req)
    } else {
        plain_query(s, req).await
    }
}

fn run(
    s: &AppState,
    req: &ApiQueryRequest,
    cancel: &AtomicBool,
    on_match: &(dyn Fn(&forge_store::StoredEntry) + Sync),
) -> (Result<ApiQueryResponse, ApiError>, bool) {
    let deadline = Instant::now() + s.query_cap;
    let opts = QueryOptions { settings: s.settings, deadline: Some(deadline), cancel: Some(cancel) };
    let out = api::execute_query(&s.store, req, &opts, on_match);
    let capped = out.as_ref().is_ok_and(|r| r.stats.truncated) && Instant::now() >= deadline;
    (out, capped)
}

async fn plain_query(s: AppState, req: ApiQueryRequest) -> Response {
    let cancel = Arc::new(AtomicBool::new(false));
    let guard = CancelOnDrop(cancel.clone());
    let result = tokio::task::spawn_blocking(move || run(&s, &req, &cancel, &|_| {})).await;
    drop(guard);
    match result {
        Ok((Ok(r), true)) => (StatusCode::GATEWAY_TIMEOUT, Json(r)).into_response(),
        Ok((Ok(r), false)) => Json(r).into_response(),
        Ok((Err(e), _)) => e.into_response(),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

#[derive(Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
enum StreamEvent {
    Match(ApiMatch),
    Result(ApiQueryResponse),
    Error { error: String },
}

fn line(event: &StreamEvent) -> Bytes {
    let mut v = serde_json::to_vec(event).expect("events serialize");
    v.push(b'\n');
    Bytes::from(v)
}

/// Streams each satisfying entry as it is found, then the ranked result
/// with its stats as the final line.
fn stream_query(s: AppState, req: ApiQueryRequest) -> Response {
    let (tx, rx) = mpsc::unbounded_channel::<Bytes>();
    let cancel = Arc::new(AtomicBool::new(false));
    let guard = CancelOnDrop(cancel.clone());
    tokio::task::spawn_blocking(move || {
        let on_match = |e: &forge_store::StoredEntry| {
            let _ = tx.send(line(&StreamEvent::Match(ApiMatch::from(e))));
        };
        let last = match run(&s, &req, &cancel, &on_match).0 {
            Ok(r) => StreamEvent::Result(r),
            Err(e) => StreamEvent::Error { error: e.to_string() },
        };
        let _ = tx.send(line(&last));
    });
    let stream = futures_util::stream::unfold((rx, guard), |(mut rx, guard)| async move {
        rx.recv().await.map(|b| (Ok::<_, Infallible>(b), (rx, guard)))
    });
    Response::builder()
        .header(header::CONTENT_TYPE, NDJSON)
        .body(Body::from_stream(stream))
        .expect("valid response")
}

/// Serves until ctrl-c.
pub async fn serve(state: AppState, bind: &str) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(bind).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
