//! Websocket transport for live sessions.
//!
//! Each connection owns at most one session. Messages and ticks for it are
//! handled in one task, so they never interleave. On disconnect the session is
//! parked and can be picked up again with `resume` within the grace period.

use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::Response;
use axum::routing::get;
use axum::Router;
use coinsert::collab::wire::AssistantKind;
use coinsert::collab::{AssistantSpec, ClientMessage, ServerMessage, Session, SessionManager};
use coinsert::{Config, Error, Result};
use tokio::net::TcpListener;
use tokio::time::MissedTickBehavior;

pub struct AppState {
    manager: Mutex<SessionManager>,
    policy: Option<PathBuf>,
    broadcast_hz: f64,
}

impl AppState {
    /// Loads the policy checkpoint up front so a bad path fails at startup.
    pub fn new(cfg: Config, policy: Option<PathBuf>) -> Result<Self> {
        cfg.validate()?;
        let broadcast_hz = cfg.collab.broadcast_hz;
        let mut manager = SessionManager::new(cfg);
        if let Some(p) = &policy {
            manager.checkpoint(p)?;
        }
        Ok(Self { manager: Mutex::new(manager), policy, broadcast_hz })
    }

    fn manager(&self) -> std::sync::MutexGuard<'_, SessionManager> {
        self.manager.lock().unwrap_or_else(|e| e.into_inner())
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new().route("/ws", get(upgrade)).route("/health", get(|| async { "ok" })).with_state(state)
}

/// Blocks serving on `bind`.
pub fn serve(cfg: Config, bind: &str, policy: Option<PathBuf>) -> Result<()> {
    let state = Arc::new(AppState::new(cfg, policy)?);
    let rt = tokio::runtime::Builder::new_current_thread().enable_all().build()?;
    rt.block_on(async {
        let listener = TcpListener::bind(bind).await?;
        println!("listening on ws://{}/ws", listener.local_addr()?);
        serve_on(listener, state).await
    })
}

pub async fn serve_on(listener: TcpListener, state: Arc<AppState>) -> Result<()> {
    axum::serve(listener, router(state)).await?;
    Ok(())
}

async fn upgrade(ws: WebSocketUpgrade, State(state): State<Arc<AppState>>) -> Response {
    ws.on_upgrade(move |socket| connection(socket, state))
}

struct Conn {
    session: Option<Session>,
    streaming: bool,
}

fn clock_seed() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_nanos() as u64).unwrap_or(0)
}

impl Conn {
    fn session(&mut self) -> Result<&mut Session> {
        self.session.as_mut().ok_or_else(|| Error::Usage("no session; send `create` or `resume` first".into()))
    }

    /// Applies one client message; returns a reply to send, if any.
    fn handle(&mut self, msg: ClientMessage, state: &AppState) -> Result<Option<ServerMessage>> {
        match msg {
            ClientMessage::Create { assistant, seed } => {
                let spec = match assistant {
                    AssistantKind::Admittance => AssistantSpec::Admittance,
                    AssistantKind::Policy => AssistantSpec::Policy {
                        checkpoint: state
                            .policy
                            .clone()
                            .ok_or_else(|| Error::Usage("server was started without a policy checkpoint".into()))?,
                    },
                };
                let s = state.manager().create(&spec, seed.unwrap_or_else(clock_seed))?;
                let info = s.info();
                self.session = Some(s);
                self.streaming = false;
                Ok(Some(ServerMessage::SessionInfo(info)))
            }
            ClientMessage::Resume { session } => {
                let s = state.manager().resume(session, Instant::now())?;
                let info = s.info();
                if let Some(old) = self.session.replace(s) {
                    state.manager().park(old, Instant::now());
                }
                self.streaming = false;
                Ok(Some(ServerMessage::SessionInfo(info)))
            }
            ClientMessage::Ready => {
                self.session()?;
                self.streaming = true;
                Ok(None)
            }
            ClientMessage::SetCursor { x, z, theta } => {
                self.session()?.set_cursor(coinsert::collab::CursorTarget { x, z, theta })?;
                Ok(None)
            }
            ClientMessage::SetFeed { rate } => {
                self.session()?.set_feed(rate)?;
                Ok(None)
            }
            ClientMessage::Pause => {
                self.session()?.set_paused(true);
                Ok(None)
            }
            ClientMessage::Play => {
                self.session()?.set_paused(false);
                Ok(None)
            }
            ClientMessage::Reset { seed } => {
                let s = self.session()?;
                s.reset(seed)?;
                Ok(Some(ServerMessage::SessionInfo(s.info())))
            }
        }
    }
}

async fn connection(mut socket: WebSocket, state: Arc<AppState>) {
    let mut conn = Conn { session: None, streaming: false };
    let mut ticker = tokio::time::interval(Duration::from_secs_f64(1.0 / state.broadcast_hz));
    // late ticks are delayed, never bunched, so simulated time cannot outrun the clock
    ticker.set_missed_tick_behavior(MissedTickBehavior::Delay);
    loop {
        tokio::select! {
            incoming = socket.recv() => {
                let text = match incoming {
                    Some(Ok(Message::Text(t))) => t,
                    Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                    Some(Ok(_)) => continue,
                };
                let was_streaming = conn.streaming;
                let reply = ClientMessage::decode(text.as_str()).and_then(|m| conn.handle(m, &state));
                if conn.streaming && !was_streaming {
                    ticker.reset_immediately();
                }
                let reply = match reply {
                    Ok(r) => r,
                    Err(e) => Some(ServerMessage::error(e)),
                };
                if let Some(r) = reply {
                    if socket.send(Message::Text(r.encode().into())).await.is_err() {
                        break;
                    }
                }
            }
            _ = ticker.tick(), if conn.streaming => {
                let Some(s) = conn.session.as_mut() else { continue };
                let msg = match s.tick() {
                    Ok(m) => ServerMessage::State(m),
                    Err(e) => ServerMessage::error(e),
                };
                if socket.send(Message::Text(msg.encode().into())).await.is_err() {
                    break;
                }
            }
        }
    }
    if let Some(s) = conn.session.take() {
        let mut m = state.manager();
        m.purge(Instant::now());
        m.park(s, Instant::now());
    }
}
