//! HTTP and WebSocket front end.
//!
//! Each session's messages are handled under its own lock, so gaze batches
//! and ticks never interleave. Everything a session publishes goes to the
//! connection that created it and to a broadcast channel read by observers.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use futures::{SinkExt, StreamExt};
use tokio::net::TcpListener;
use tokio::sync::{broadcast, mpsc, Mutex};

use crate::fixtures::FixtureRegistry;
use crate::protocol::{ClientMsg, Clock, ErrorCode, ServerMsg};
use crate::session::{Rejection, Session};

/// Events kept for a slow observer before it starts missing some.
const OBSERVER_BACKLOG: usize = 1024;

struct Live {
    session: Mutex<Session>,
    owner: mpsc::UnboundedSender<String>,
    observers: broadcast::Sender<String>,
}

impl Live {
    fn publish(&self, msg: &ServerMsg) {
        let text = msg.to_json();
        let _ = self.owner.send(text.clone());
        let _ = self.observers.send(text);
    }
}

#[derive(Clone)]
pub struct AppState {
    fixtures: Arc<FixtureRegistry>,
    sessions: Arc<std::sync::Mutex<HashMap<String, Arc<Live>>>>,
    next_id: Arc<AtomicU64>,
}

impl AppState {
    pub fn new(fixtures: FixtureRegistry) -> Self {
        AppState {
            fixtures: Arc::new(fixtures),
            sessions: Arc::default(),
            next_id: Arc::new(AtomicU64::new(1)),
        }
    }

    fn lookup(&self, id: &str) -> Option<Arc<Live>> {
        self.sessions.lock().expect("session table poisoned").get(id).cloned()
    }

    fn remove(&self, id: &str) -> Option<Arc<Live>> {
        self.sessions.lock().expect("session table poisoned").remove(id)
    }
}

pub fn router(fixtures: FixtureRegistry) -> Router {
    Router::new()
        .route("/ws", get(ws_upgrade))
        .route("/fixtures", get(list_fixtures))
        .route("/fixtures/:id/manifest", get(fixture_manifest))
        .route("/fixtures/:id/tracks.csv", get(fixture_tracks))
        .route("/fixtures/:id/gaze.csv", get(fixture_gaze))
        .with_state(AppState::new(fixtures))
}

pub async fn serve(listener: TcpListener, fixtures: FixtureRegistry) -> std::io::Result<()> {
    axum::serve(listener, router(fixtures)).await
}

async fn list_fixtures(State(state): State<AppState>) -> Json<Vec<String>> {
    Json(state.fixtures.ids())
}

fn not_found(id: &str) -> Response {
    (StatusCode::NOT_FOUND, format!("unknown fixture `{id}`")).into_response()
}

async fn fixture_manifest(State(state): State<AppState>, Path(id): Path<String>) -> Response {
    match state.fixtures.get(&id).map(|f| f.manifest()) {
        Some(Ok(m)) => Json(m).into_response(),
        Some(Err(e)) => (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response(),
        None => not_found(&id),
    }
}

async fn fixture_tracks(State(state): State<AppState>, Path(id): Path<String>) -> Response {
    match state.fixtures.get(&id) {
        Some(f) => ([(header::CONTENT_TYPE, "text/csv")], f.tracks_csv.clone()).into_response(),
        None => not_found(&id),
    }
}

async fn fixture_gaze(State(state): State<AppState>, Path(id): Path<String>) -> Response {
    match state.fixtures.get(&id).and_then(|f| f.gaze_csv.clone()) {
        Some(csv) => ([(header::CONTENT_TYPE, "text/csv")], csv).into_response(),
        None => not_found(&id),
    }
}

async fn ws_upgrade(ws: WebSocketUpgrade, State(state): State<AppState>) -> Response {
    ws.on_upgrade(move |socket| connection(socket, state))
}

/// Per-connection loop: a writer task drains `out`, the reader handles one
/// message at a time.
async fn connection(socket: WebSocket, state: AppState) {
    let (mut sink, mut stream) = socket.split();
    let (out, mut rx) = mpsc::unbounded_channel::<String>();
    let writer = tokio::spawn(async move {
        while let Some(text) = rx.recv().await {
            if sink.send(Message::Text(text)).await.is_err() {
                break;
            }
        }
    });

    let mut conn = Connection {
        state,
        out,
        owned: Vec::new(),
        observing: Vec::new(),
    };
    while let Some(Ok(msg)) = stream.next().await {
        match msg {
            Message::Text(text) => conn.handle(&text).await,
            Message::Close(_) => break,
            _ => {}
        }
    }
    conn.shutdown().await;
    drop(conn);
    let _ = writer.await;
}

struct Connection {
    state: AppState,
    out: mpsc::UnboundedSender<String>,
    /// Sessions created here, newest last.
    owned: Vec<String>,
    observing: Vec<tokio::task::JoinHandle<()>>,
}

impl Connection {
    fn reply(&self, msg: &ServerMsg) {
        let _ = self.out.send(msg.to_json());
    }

    fn reject(&self, session_id: Option<&str>, code: ErrorCode, msg: impl Into<String>) {
        self.reply(&ServerMsg::error(session_id, code, msg));
    }

    /// The named session, or the newest one created on this connection.
    fn resolve(&self, id: Option<String>) -> Option<(String, Arc<Live>)> {
        let id = id.or_else(|| self.owned.last().cloned());
        let Some(id) = id else {
            self.reject(None, ErrorCode::UnknownSession, "no session_id and no session on this connection");
            return None;
        };
        match self.state.lookup(&id) {
            Some(live) => Some((id, live)),
            None => {
                self.reject(Some(&id), ErrorCode::UnknownSession, format!("unknown session `{id}`"));
                None
            }
        }
    }

    async fn handle(&mut self, text: &str) {
        let msg: ClientMsg = match serde_json::from_str(text) {
            Ok(m) => m,
            Err(e) => return self.reject(None, ErrorCode::BadRequest, e.to_string()),
        };
        match msg {
            ClientMsg::Create { fixture, params, clock } => self.create(&fixture, &params, clock).await,
            ClientMsg::Gaze { session_id, samples } => {
                let Some((id, live)) = self.resolve(session_id) else { return };
                let result = live.session.lock().await.ingest_gaze(&samples);
                match result {
                    Ok(ack) => self.reply(&ack),
                    Err(r) => self.reply(&r.into_msg(Some(&id))),
                }
            }
            ClientMsg::Tick { session_id } => {
                let Some((id, live)) = self.resolve(session_id) else { return };
                let mut session = live.session.lock().await;
                if session.clock() == Clock::Server && !session.is_closed() {
                    return self.reject(Some(&id), ErrorCode::ServerClock, "this session is ticked by the server");
                }
                if let Err(r) = tick_and_publish(&live, &mut session) {
                    self.reply(&r.into_msg(Some(&id)));
                }
            }
            ClientMsg::SetParams { session_id, params } => {
                let Some((id, live)) = self.resolve(session_id) else { return };
                let result = live.session.lock().await.set_params(&params);
                match result {
                    Ok(ack) => self.reply(&ack),
                    Err(r) => self.reply(&r.into_msg(Some(&id))),
                }
            }
            ClientMsg::Close { session_id } => {
                let Some((id, live)) = self.resolve(session_id) else { return };
                let mut session = live.session.lock().await;
                if session.is_closed() {
                    return self.reject(Some(&id), ErrorCode::SessionClosed, format!("session {id} is closed"));
                }
                live.publish(&session.close());
            }
            ClientMsg::Observe { session_id } => {
                let Some((_, live)) = self.resolve(Some(session_id)) else { return };
                let mut rx = live.observers.subscribe();
                self.reply(&live.session.lock().await.manifest());
                let out = self.out.clone();
                self.observing.push(tokio::spawn(async move {
                    loop {
                        match rx.recv().await {
                            Ok(text) => {
                                if out.send(text).is_err() {
                                    break;
                                }
                            }
                            Err(broadcast::error::RecvError::Lagged(n)) => {
                                let msg = ServerMsg::error(None, ErrorCode::Internal, format!("observer missed {n} events"));
                                let _ = out.send(msg.to_json());
                            }
                            Err(broadcast::error::RecvError::Closed) => break,
                        }
                    }
                }));
            }
        }
    }

    async fn create(&mut self, fixture_id: &str, params: &stagecut_core::params::ParamOverrides, clock: Clock) {
        let Some(fixture) = self.state.fixtures.get(fixture_id).cloned() else {
            return self.reject(None, ErrorCode::UnknownFixture, format!("unknown fixture `{fixture_id}`"));
        };
        let id = format!("s{}", self.state.next_id.fetch_add(1, Ordering::Relaxed));
        let session = match Session::create(id.clone(), fixture, params, clock) {
            Ok(s) => s,
            Err(r) => return self.reply(&r.into_msg(None)),
        };
        let fps = session.engine().clip().fps;
        self.reply(&session.manifest());
        let (observers, _) = broadcast::channel(OBSERVER_BACKLOG);
        let live = Arc::new(Live {
            session: Mutex::new(session),
            owner: self.out.clone(),
            observers,
        });
        self.state
            .sessions
            .lock()
            .expect("session table poisoned")
            .insert(id.clone(), Arc::clone(&live));
        self.owned.push(id);
        if clock == Clock::Server {
            tokio::spawn(server_clock(live, fps));
        }
    }

    /// Closes the sessions this connection created.
    async fn shutdown(&mut self) {
        for id in std::mem::take(&mut self.owned) {
            if let Some(live) = self.state.remove(&id) {
                let closed = live.session.lock().await.close();
                let _ = live.observers.send(closed.to_json());
            }
        }
        for task in self.observing.drain(..) {
            task.abort();
        }
    }
}

/// Publishes the tick's event; a rejection is returned for the caller.
fn tick_and_publish(live: &Live, session: &mut Session) -> Result<(), Rejection> {
    let msg = session.tick()?;
    live.publish(&msg);
    if session.is_finished() {
        live.publish(&ServerMsg::End {
            session_id: session.id().to_string(),
            frames: session.engine().frame_count(),
        });
    }
    Ok(())
}

/// Ticks at the clip frame rate until the session ends or closes.
async fn server_clock(live: Arc<Live>, fps: f64) {
    let mut interval = tokio::time::interval(Duration::from_secs_f64(1.0 / fps));
    interval.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
    loop {
        interval.tick().await;
        let mut session = live.session.lock().await;
        if session.is_closed() || session.is_finished() {
            break;
        }
        if let Err(r) = tick_and_publish(&live, &mut session) {
            let _ = live.owner.send(r.into_msg(Some(session.id())).to_json());
            break;
        }
    }
}
