//! HTTP session service.
//!
//! | method | path | body / reply |
//! |---|---|---|
//! | POST | `/sessions` | `{mode?, config?, level?}` → `201 {id, mode}` |
//! | GET | `/sessions/{id}` | `{id, mode, steps, messages}` |
//! | POST | `/sessions/{id}/messages` | `{text}` → `{step, response, level, trace}` |
//! | GET | `/sessions/{id}/level` | level JSON |
//! | GET | `/sessions/{id}/trace/{n}` | trace of step `n` (0-based) |
//! | GET | `/sessions/{id}/events` | server-sent events; `?follow=false` replays and closes |
//!
//! Errors are `{"error": CODE, "message": ..}` with codes `BAD_CONFIG`,
//! `BAD_REQUEST`, `SESSION_NOT_FOUND`, `TRACE_NOT_FOUND`, `BUSY` and
//! `PIPELINE_ABORT`.

use std::collections::HashMap;
use std::convert::Infallible;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use freyr_core::dungeon::validate_domain;
use freyr_core::pipeline::run_mode;
use freyr_core::{
    ChatBackend, Dungeon, Message, Mode, PipelineConfig, PipelineEvent, PipelineTrace, ToolRegistry,
};
use futures::stream::{self, Stream, StreamExt};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::broadcast;

use crate::config::FreyrConfig;

/// Version of the JSON payloads served here.
pub const API_VERSION: u32 = 1;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
        }
    }

    fn bad_config(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "BAD_CONFIG", message)
    }

    fn not_found(id: &str) -> Self {
        Self::new(
            StatusCode::NOT_FOUND,
            "SESSION_NOT_FOUND",
            format!("no session '{id}'"),
        )
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (
            self.status,
            Json(json!({"error": self.code, "message": self.message})),
        )
            .into_response()
    }
}

/// One pipeline event as stored and streamed. `seq` counts from 1 per session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub seq: u64,
    pub step: usize,
    #[serde(flatten)]
    pub event: PipelineEvent,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SessionData {
    pub conversation: Vec<Message>,
    pub level: Dungeon,
    pub traces: Vec<PipelineTrace>,
    pub events: Vec<SessionEvent>,
}

pub struct Session {
    pub id: String,
    pub mode: Mode,
    pub config: PipelineConfig,
    busy: AtomicBool,
    seq: AtomicU64,
    data: Mutex<SessionData>,
    live: broadcast::Sender<SessionEvent>,
}

impl Session {
    fn new(id: String, mode: Mode, config: PipelineConfig, level: Dungeon) -> Self {
        let (live, _) = broadcast::channel(256);
        Self {
            id,
            mode,
            config,
            busy: AtomicBool::new(false),
            seq: AtomicU64::new(0),
            data: Mutex::new(SessionData {
                level,
                ..SessionData::default()
            }),
            live,
        }
    }

    pub fn data(&self) -> std::sync::MutexGuard<'_, SessionData> {
        self.data.lock().expect("session data")
    }

    fn record(&self, step: usize, event: &PipelineEvent) {
        let mut data = self.data();
        let e = SessionEvent {
            seq: self.seq.fetch_add(1, Ordering::SeqCst) + 1,
            step,
            event: event.clone(),
        };
        data.events.push(e.clone());
        // Nobody listening is fine.
        let _ = self.live.send(e);
    }
}

/// Clears the busy flag when the step ends, however it ends.
struct BusyGuard(Arc<Session>);

impl BusyGuard {
    fn acquire(session: &Arc<Session>) -> Option<Self> {
        session
            .busy
            .compare_exchange(false, true, Ordering::SeqCst, Ordering::SeqCst)
            .ok()
            .map(|_| BusyGuard(session.clone()))
    }
}

impl Drop for BusyGuard {
    fn drop(&mut self) {
        self.0.busy.store(false, Ordering::SeqCst);
    }
}

pub struct AppState {
    sessions: RwLock<HashMap<String, Arc<Session>>>,
    backend: Arc<dyn ChatBackend>,
    registry: Arc<ToolRegistry>,
    defaults: FreyrConfig,
    snapshots: Option<PathBuf>,
}

impl AppState {
    pub fn new(backend: Arc<dyn ChatBackend>, defaults: FreyrConfig) -> Self {
        Self {
            sessions: RwLock::default(),
            backend,
            registry: Arc::new(ToolRegistry::standard()),
            defaults,
            snapshots: None,
        }
    }

    /// Write a JSON snapshot of a session to `dir` after every change.
    pub fn with_snapshots(mut self, dir: PathBuf) -> Self {
        self.snapshots = Some(dir);
        self
    }

    pub fn session(&self, id: &str) -> Result<Arc<Session>, ApiError> {
        self.sessions
            .read()
            .expect("sessions")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(id))
    }

    fn snapshot(&self, s: &Session) {
        let Some(dir) = &self.snapshots else { return };
        let body = {
            let data = s.data();
            json!({"version": API_VERSION, "id": s.id, "mode": s.mode, "config": s.config, "data": *data})
        };
        let path = dir.join(format!("{}.json", s.id));
        let res =
            std::fs::create_dir_all(dir).and_then(|_| std::fs::write(&path, body.to_string()));
        if let Err(e) = res {
            tracing::warn!(path = %path.display(), "snapshot failed: {e}");
        }
    }
}

/// Per-session overrides of the service defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SessionSettings {
    model: Option<String>,
    temperature: Option<f64>,
    top_p: Option<f64>,
    max_retries: Option<u32>,
    max_intents: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateRequest {
    mode: Option<String>,
    config: Option<SessionSettings>,
    level: Option<Dungeon>,
}

#[derive(Debug, Deserialize)]
struct MessageRequest {
    text: String,
}

#[derive(Debug, Deserialize)]
struct EventsQuery {
    follow: Option<bool>,
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/messages", post(post_message))
        .route("/sessions/{id}/level", get(get_level))
        .route("/sessions/{id}/trace/{n}", get(get_trace))
        .route("/sessions/{id}/events", get(get_events))
        .with_state(state)
}

pub async fn serve(addr: &str, state: Arc<AppState>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}

async fn create_session(
    State(st): State<Arc<AppState>>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let req: CreateRequest = if body.iter().all(u8::is_ascii_whitespace) {
        CreateRequest::default()
    } else {
        serde_json::from_slice(&body).map_err(|e| ApiError::bad_config(e.to_string()))?
    };
    let mode: Mode = match req.mode.as_deref() {
        None => Mode::Freyr,
        Some(m) => m.parse().map_err(ApiError::bad_config)?,
    };
    let mut fc = st.defaults.clone();
    if let Some(s) = req.config {
        fc.model = s.model.unwrap_or(fc.model);
        fc.temperature = s.temperature.unwrap_or(fc.temperature);
        fc.top_p = s.top_p.unwrap_or(fc.top_p);
        fc.max_retries = s.max_retries.unwrap_or(fc.max_retries);
        fc.max_intents = s.max_intents.unwrap_or(fc.max_intents);
    }
    let config = fc
        .pipeline()
        .map_err(|e| ApiError::bad_config(e.to_string()))?;
    let level = req.level.unwrap_or_default();
    let report = validate_domain(&level);
    if !report.is_empty() {
        return Err(ApiError::bad_config(format!(
            "starting level is invalid: {report}"
        )));
    }
    let id = uuid::Uuid::new_v4().simple().to_string();
    let session = Arc::new(Session::new(id.clone(), mode, config, level));
    st.sessions
        .write()
        .expect("sessions")
        .insert(id.clone(), session.clone());
    st.snapshot(&session);
    Ok((StatusCode::CREATED, Json(json!({"id": id, "mode": mode}))).into_response())
}

async fn get_session(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let s = st.session(&id)?;
    let data = s.data();
    Ok(Json(json!({
        "version": API_VERSION,
        "id": s.id,
        "mode": s.mode,
        "busy": s.busy.load(Ordering::SeqCst),
        "steps": data.traces.len(),
        "messages": data.conversation,
    }))
    .into_response())
}

async fn post_message(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let s = st.session(&id)?;
    let req: MessageRequest = serde_json::from_slice(&body).map_err(|e| {
        ApiError::new(
            StatusCode::BAD_REQUEST,
            "BAD_REQUEST",
            format!("expected {{\"text\": ..}}: {e}"),
        )
    })?;
    let guard = BusyGuard::acquire(&s).ok_or_else(|| {
        ApiError::new(
            StatusCode::CONFLICT,
            "BUSY",
            "a step is already running in this session",
        )
    })?;
    let (conversation, level, step) = {
        let d = s.data();
        (d.conversation.clone(), d.level.clone(), d.traces.len())
    };
    let (backend, registry, session) = (st.backend.clone(), st.registry.clone(), s.clone());
    let out = tokio::task::spawn_blocking(move || {
        let _guard = guard;
        run_mode(
            session.mode,
            &session.config,
            &registry,
            &*backend,
            &conversation,
            &req.text,
            &level,
            &mut |e| session.record(step, e),
        )
        .map(|out| (req.text, out))
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "INTERNAL", e.to_string()))?;
    match out {
        Ok((text, out)) => {
            {
                let mut d = s.data();
                d.conversation.push(Message::user(text));
                d.conversation.push(Message::assistant(out.response.clone()));
                d.level = out.level.clone();
                d.traces.push(out.trace.clone());
            }
            st.snapshot(&s);
            Ok(Json(json!({"step": step, "response": out.response, "level": out.level, "trace": out.trace}))
                .into_response())
        }
        Err(abort) => Ok((
            StatusCode::BAD_GATEWAY,
            Json(json!({"error": "PIPELINE_ABORT", "message": abort.to_string(), "trace": abort.trace})),
        )
            .into_response()),
    }
}

async fn get_level(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<Dungeon>, ApiError> {
    Ok(Json(st.session(&id)?.data().level.clone()))
}

async fn get_trace(
    State(st): State<Arc<AppState>>,
    Path((id, n)): Path<(String, usize)>,
) -> Result<Json<PipelineTrace>, ApiError> {
    let s = st.session(&id)?;
    let d = s.data();
    d.traces.get(n).cloned().map(Json).ok_or_else(|| {
        ApiError::new(
            StatusCode::NOT_FOUND,
            "TRACE_NOT_FOUND",
            format!("session has {} steps", d.traces.len()),
        )
    })
}

fn sse_event(e: &SessionEvent) -> Result<Event, Infallible> {
    let data = serde_json::to_string(e).expect("event serializes");
    Ok(Event::default()
        .event(e.event.name())
        .id(e.seq.to_string())
        .data(data))
}

async fn get_events(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<EventsQuery>,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ApiError> {
    let s = st.session(&id)?;
    // Subscribe before snapshotting so nothing falls in between.
    let rx = s.live.subscribe();
    let past = s.data().events.clone();
    let last = past.last().map_or(0, |e| e.seq);
    let replay = stream::iter(past.iter().map(sse_event).collect::<Vec<_>>());
    let live = if q.follow.unwrap_or(true) {
        stream::unfold(rx, |mut rx| async move {
            loop {
                match rx.recv().await {
                    Ok(e) => return Some((e, rx)),
                    Err(broadcast::error::RecvError::Lagged(n)) => {
                        tracing::warn!("event stream lagged by {n}")
                    }
                    Err(broadcast::error::RecvError::Closed) => return None,
                }
            }
        })
        .filter(move |e| std::future::ready(e.seq > last))
        .map(|e| sse_event(&e))
        .boxed()
    } else {
        stream::empty().boxed()
    };
    Ok(Sse::new(replay.chain(live)).keep_alive(KeepAlive::default()))
}
