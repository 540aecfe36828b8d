//! WebSocket server hosting many concurrent games.
//!
//! Each game runs in its own task that owns the [`Session`]; connection
//! tasks talk to it only through message queues. `/ws` speaks the JSON
//! protocol from `gridrts-protocol`, `/healthz` reports liveness.
//!
//! [`Session`]: gridrts_core::Session

mod conn;
mod game;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::{State, WebSocketUpgrade};
use axum::response::{IntoResponse, Json};
use axum::routing::get;
use axum::Router;
use serde_json::json;
use tokio::net::TcpListener;
use tokio::sync::mpsc;

use gridrts_protocol::PROTOCOL_VERSION;

pub use game::GameCmd;

/// Environment variable holding the default bind address.
pub const BIND_ENV: &str = "GRIDRTS_BIND";
pub const DEFAULT_BIND: &str = "127.0.0.1:8080";

#[derive(Debug, thiserror::Error)]
pub enum ServerError {
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: String, source: std::io::Error },
    #[error("server i/o: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug)]
pub struct ServerConfig {
    pub max_games: usize,
    /// Where finished games' transcripts are written, if anywhere.
    pub transcript_dir: Option<PathBuf>,
    /// Simulated seconds a disconnected remote seat idles before forfeiting.
    pub grace_seconds: f64,
    /// How long a finished game keeps answering `observe`/`spectate`.
    pub linger: Duration,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig { max_games: 64, transcript_dir: None, grace_seconds: 5.0, linger: Duration::from_secs(60) }
    }
}

/// The bind address from `explicit`, else [`BIND_ENV`], else [`DEFAULT_BIND`].
pub fn bind_address(explicit: Option<&str>) -> String {
    explicit
        .map(str::to_string)
        .or_else(|| std::env::var(BIND_ENV).ok().filter(|s| !s.is_empty()))
        .unwrap_or_else(|| DEFAULT_BIND.to_string())
}

pub(crate) struct GameHandle {
    pub tx: mpsc::UnboundedSender<GameCmd>,
    pub done: Arc<AtomicBool>,
}

/// Shared routing table. Holds queue handles only, never game state.
pub(crate) struct Registry {
    pub config: ServerConfig,
    pub games: Mutex<HashMap<u64, GameHandle>>,
    next_game: AtomicU64,
    next_conn: AtomicU64,
}

impl Registry {
    pub fn next_game_id(&self) -> u64 {
        self.next_game.fetch_add(1, Ordering::Relaxed)
    }

    pub fn next_conn_id(&self) -> u64 {
        self.next_conn.fetch_add(1, Ordering::Relaxed)
    }

    pub fn active_games(&self) -> usize {
        self.games.lock().unwrap().values().filter(|g| !g.done.load(Ordering::Relaxed)).count()
    }

    pub fn sender(&self, game_id: u64) -> Option<mpsc::UnboundedSender<GameCmd>> {
        self.games.lock().unwrap().get(&game_id).map(|g| g.tx.clone())
    }
}

#[derive(Clone)]
pub struct AppState {
    registry: Arc<Registry>,
}

impl AppState {
    pub fn new(config: ServerConfig) -> Self {
        AppState {
            registry: Arc::new(Registry {
                config,
                games: Mutex::new(HashMap::new()),
                next_game: AtomicU64::new(1),
                next_conn: AtomicU64::new(1),
            }),
        }
    }

    pub fn active_games(&self) -> usize {
        self.registry.active_games()
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/ws", get(ws_handler))
        .route("/healthz", get(healthz))
        .with_state(state)
}

async fn healthz(State(app): State<AppState>) -> Json<serde_json::Value> {
    Json(json!({ "games_active": app.active_games(), "protocol_version": PROTOCOL_VERSION }))
}

async fn ws_handler(ws: WebSocketUpgrade, State(app): State<AppState>) -> impl IntoResponse {
    let registry = app.registry.clone();
    ws.on_upgrade(move |socket| conn::handle_socket(socket, registry))
}

pub async fn bind(addr: &str) -> Result<TcpListener, ServerError> {
    TcpListener::bind(addr).await.map_err(|source| ServerError::Bind { addr: addr.to_string(), source })
}

/// Serves on an already-bound listener until the task is dropped.
pub async fn serve(listener: TcpListener, config: ServerConfig) -> Result<(), ServerError> {
    let addr = listener.local_addr()?;
    tracing::info!(%addr, max_games = config.max_games, "server listening");
    axum::serve(listener, router(AppState::new(config))).await?;
    Ok(())
}

/// Binds an ephemeral local port and serves in the background; for tests
/// and embedding.
pub async fn spawn_local(config: ServerConfig) -> Result<SocketAddr, ServerError> {
    let listener = bind("127.0.0.1:0").await?;
    let addr = listener.local_addr()?;
    tokio::spawn(async move {
        if let Err(e) = serve(listener, config).await {
            tracing::error!(error = %e, "server stopped");
        }
    });
    Ok(addr)
}
