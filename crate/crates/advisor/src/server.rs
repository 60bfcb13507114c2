//! JSON-over-HTTP front end for the session store.

use std::sync::Arc;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use advisor_core::{EngineInput, Error as CoreError, Stage};
use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::store::{SessionStore, StoreError};

/// When the server is built with `allow_test_clock`, this header (milliseconds)
/// replaces the wall clock for the request.
pub const CLOCK_HEADER: &str = "x-advisor-now-ms";
pub const DEFAULT_IDLE_TIMEOUT_MS: u64 = 15_000;

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<SessionStore>,
    pub allow_test_clock: bool,
}

pub fn wall_clock_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/spots", get(list_spots))
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}/turns", post(post_turn))
        .route("/api/sessions/{id}/transcript", get(get_transcript))
        .with_state(state)
}

/// Periodically times out idle sessions until the task is dropped.
pub async fn run_idle_sweep(store: Arc<SessionStore>, idle_ms: u64) {
    let period = Duration::from_millis((idle_ms / 4).clamp(250, 5_000));
    let mut ticker = tokio::time::interval(period);
    loop {
        ticker.tick().await;
        for id in store.sweep(wall_clock_ms(), idle_ms) {
            tracing::debug!(session = %id, "idle timeout fired");
        }
    }
}

struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let status = match &e {
            StoreError::UnknownSession(_) | StoreError::UnknownSpot(_) => StatusCode::NOT_FOUND,
            StoreError::Engine(CoreError::SessionEnded(_)) => StatusCode::CONFLICT,
            StoreError::Engine(CoreError::IdenticalSpots(_) | CoreError::InvalidInput(_)) => {
                StatusCode::BAD_REQUEST
            }
            StoreError::Engine(_) | StoreError::Io(_) => {
                tracing::error!(error = %e, "request failed");
                StatusCode::INTERNAL_SERVER_ERROR
            }
        };
        ApiError(status, e.to_string())
    }
}

fn bad_request(msg: impl Into<String>) -> ApiError {
    ApiError(StatusCode::BAD_REQUEST, msg.into())
}

fn now(state: &AppState, headers: &HeaderMap) -> Result<u64, ApiError> {
    match headers.get(CLOCK_HEADER) {
        Some(v) if state.allow_test_clock => v
            .to_str()
            .ok()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| bad_request(format!("{CLOCK_HEADER} must be an integer"))),
        _ => Ok(wall_clock_ms()),
    }
}

fn parse_body<T: serde::de::DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| bad_request(format!("invalid request body: {e}")))
}

#[derive(Serialize)]
struct SpotSummary<'a> {
    id: &'a str,
    name: &'a str,
    spot_type: &'a str,
    introduction: &'a str,
}

async fn list_spots(State(state): State<AppState>) -> Response {
    let spots: Vec<_> = state
        .store
        .resources()
        .catalog
        .spots
        .iter()
        .map(|s| SpotSummary {
            id: &s.id,
            name: &s.name,
            spot_type: &s.spot_type,
            introduction: &s.introduction,
        })
        .collect();
    Json(spots).into_response()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateRequest {
    spot_a_id: String,
    spot_b_id: String,
    agency_spot: u8,
}

async fn create_session(
    State(state): State<AppState>,
    headers: HeaderMap,
    body: axum::body::Bytes,
) -> Result<Response, ApiError> {
    let req: CreateRequest = parse_body(&body)?;
    let now = now(&state, &headers)?;
    let (session_id, greeting) =
        state.store.create(&req.spot_a_id, &req.spot_b_id, req.agency_spot, now)?;
    tracing::info!(session = %session_id, a = %req.spot_a_id, b = %req.spot_b_id, "session created");
    Ok((
        StatusCode::CREATED,
        Json(json!({ "session_id": session_id, "greeting": greeting })),
    )
        .into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TurnRequest {
    #[serde(default)]
    text: Option<String>,
    #[serde(default)]
    timeout: bool,
}

#[derive(Serialize)]
struct TurnResponse {
    reply: String,
    stage: Stage,
    done: bool,
}

async fn post_turn(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: axum::body::Bytes,
) -> Result<Json<TurnResponse>, ApiError> {
    let req: TurnRequest = parse_body(&body)?;
    let input = match (req.text, req.timeout) {
        (Some(text), false) => EngineInput::utterance(text).map_err(|e| bad_request(e.to_string()))?,
        (None, true) => EngineInput::Timeout,
        _ => return Err(bad_request("expected exactly one of `text` or `timeout: true`")),
    };
    let now = now(&state, &headers)?;
    let out = state.store.step(&id, input, now).await?;
    Ok(Json(TurnResponse {
        reply: out.reply,
        stage: out.stage,
        done: out.done,
    }))
}

async fn get_transcript(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let transcript = state.store.transcript(&id).await?;
    Ok((
        [(header::CONTENT_TYPE, "application/x-ndjson")],
        transcript.to_jsonl(),
    )
        .into_response())
}
