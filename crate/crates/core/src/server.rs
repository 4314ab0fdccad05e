//! HTTP entry point: configuration, image and thumbnail serving, admin
//! import/export, stats, and the websocket sync channel.

use std::ffi::OsString;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use clap::{ArgGroup, Parser};
use futures::{SinkExt, StreamExt};
use serde_json::json;
use tokio::net::TcpListener;

use crate::graph::GraphState;
use crate::ingest::{self, IngestConfig, IngestError, DEFAULT_THUMB_SIZE, MIN_THUMB_SIZE};
use crate::io::{export_labels, import_graph, ImportError};
use crate::sync::{self, Autosaver, Disposition, SyncHub, DEFAULT_MAX_CLIENTS, MAX_CLIENTS_ENV};

const INDEX_HTML: &str = include_str!("../assets/index.html");

#[derive(Debug, Parser)]
#[command(name = "anchorgraph", version, about = "Collaborative graph-based image labeling server")]
#[command(group(
    ArgGroup::new("seed")
        .required(true)
        .multiple(true)
        .args(["dataset_dir", "state_file"])
))]
struct Cli {
    /// TCP port to listen on.
    #[arg(long, default_value_t = 8080)]
    port: u16,
    /// Folder of pictures; ingested when no state file is loaded, and always
    /// used to serve image bytes.
    #[arg(long)]
    dataset_dir: Option<PathBuf>,
    /// Graph document to load at startup and to autosave into.
    #[arg(long)]
    state_file: Option<PathBuf>,
    /// Longest thumbnail edge in pixels.
    #[arg(long, default_value_t = DEFAULT_THUMB_SIZE,
          value_parser = clap::value_parser!(u32).range(MIN_THUMB_SIZE as i64..))]
    thumb_size: u32,
    /// Seconds between autosaves of the state file.
    #[arg(long, default_value_t = 30, value_parser = clap::value_parser!(u64).range(1..))]
    autosave_secs: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServerConfig {
    pub port: u16,
    pub dataset_dir: Option<PathBuf>,
    pub state_file: Option<PathBuf>,
    pub thumb_size: u32,
    pub autosave_secs: u64,
    pub max_clients: usize,
}

/// Parses command-line arguments (including the program name). `--help` and
/// `--version` come back as errors whose `exit()` terminates with status 0;
/// usage errors exit with status 2.
pub fn cli_entry<I, T>(args: I) -> Result<ServerConfig, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    Ok(ServerConfig {
        port: cli.port,
        dataset_dir: cli.dataset_dir,
        state_file: cli.state_file,
        thumb_size: cli.thumb_size,
        autosave_secs: cli.autosave_secs,
        max_clients: max_clients_from_env(),
    })
}

fn max_clients_from_env() -> usize {
    match std::env::var(MAX_CLIENTS_ENV) {
        Ok(v) => v.parse().unwrap_or_else(|_| {
            log::warn!("ignoring invalid {MAX_CLIENTS_ENV}={v:?}");
            DEFAULT_MAX_CLIENTS
        }),
        Err(_) => DEFAULT_MAX_CLIENTS,
    }
}

#[derive(Debug, thiserror::Error)]
pub enum StartupError {
    #[error("no graph source: give --dataset-dir or an existing --state-file")]
    NoSeed,
    #[error("cannot read state file {path}: {source}")]
    StateFileRead {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("state file {path} is invalid: {source}")]
    StateFileInvalid {
        path: PathBuf,
        #[source]
        source: ImportError,
    },
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("cannot bind port {port}: {source}")]
    Bind {
        port: u16,
        #[source]
        source: std::io::Error,
    },
    #[error("server error: {0}")]
    Serve(#[source] std::io::Error),
}

/// The initial graph. An existing state file wins over the dataset folder.
pub fn seed_state(config: &ServerConfig) -> Result<GraphState, StartupError> {
    if let Some(path) = config.state_file.as_ref().filter(|p| p.exists()) {
        let bytes = std::fs::read(path).map_err(|source| StartupError::StateFileRead {
            path: path.clone(),
            source,
        })?;
        log::info!("loading graph from {}", path.display());
        return import_graph(&bytes).map_err(|source| StartupError::StateFileInvalid {
            path: path.clone(),
            source,
        });
    }
    match &config.dataset_dir {
        Some(dir) => {
            log::info!("ingesting {}", dir.display());
            Ok(ingest::ingest_folder(&IngestConfig::new(dir))?)
        }
        None => Err(StartupError::NoSeed),
    }
}

#[derive(Clone)]
pub struct AppState {
    pub hub: Arc<SyncHub>,
    pub dataset_dir: Option<PathBuf>,
}

pub fn router(app: AppState) -> Router {
    Router::new()
        .route("/", get(index))
        .route("/api/export", get(export))
        .route("/api/export/labels.csv", get(export_labels_csv))
        .route("/api/admin/load", post(admin_load))
        .route("/api/stats", get(stats))
        .route("/images/{name}", get(image))
        .route("/thumbs/{name}", get(thumb))
        .route("/ws", get(ws_upgrade))
        .with_state(app)
}

async fn index() -> Html<&'static str> {
    Html(INDEX_HTML)
}

async fn export(State(app): State<AppState>) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], app.hub.export()).into_response()
}

async fn export_labels_csv(State(app): State<AppState>) -> Response {
    let csv = export_labels(&app.hub.snapshot().state);
    ([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], csv).into_response()
}

async fn admin_load(State(app): State<AppState>, body: Bytes) -> Response {
    let hub = app.hub.clone();
    let result = tokio::task::spawn_blocking(move || hub.load_graph(&body)).await;
    match result {
        Ok(Ok(())) => Json(app.hub.stats()).into_response(),
        Ok(Err(e)) => (
            StatusCode::BAD_REQUEST,
            Json(json!({"error": e.code(), "detail": e.to_string()})),
        )
            .into_response(),
        Err(e) => (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response(),
    }
}

async fn stats(State(app): State<AppState>) -> Json<sync::Stats> {
    Json(app.hub.stats())
}

async fn image(State(app): State<AppState>, UrlPath(name): UrlPath<String>) -> Response {
    match &app.dataset_dir {
        Some(dir) => serve_file(dir, &name).await,
        None => StatusCode::NOT_FOUND.into_response(),
    }
}

async fn thumb(State(app): State<AppState>, UrlPath(name): UrlPath<String>) -> Response {
    match &app.dataset_dir {
        Some(dir) => serve_file(&dir.join(ingest::THUMB_DIR), &name).await,
        None => StatusCode::NOT_FOUND.into_response(),
    }
}

/// A servable name is one plain file name: no separators, no dot-prefix.
fn is_plain_file_name(name: &str) -> bool {
    !name.is_empty()
        && !name.starts_with('.')
        && !name.contains(['/', '\\', '\0'])
}

fn content_type(name: &str) -> &'static str {
    let ext = Path::new(name)
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    match ext.as_deref() {
        Some("png") => "image/png",
        Some("jpg" | "jpeg") => "image/jpeg",
        Some("gif") => "image/gif",
        Some("bmp") => "image/bmp",
        _ => "application/octet-stream",
    }
}

async fn serve_file(dir: &Path, name: &str) -> Response {
    if !is_plain_file_name(name) {
        return StatusCode::NOT_FOUND.into_response();
    }
    let (Ok(root), Ok(path)) = (
        tokio::fs::canonicalize(dir).await,
        tokio::fs::canonicalize(dir.join(name)).await,
    ) else {
        return StatusCode::NOT_FOUND.into_response();
    };
    // symlinks may still point elsewhere
    if path.parent() != Some(root.as_path()) {
        return StatusCode::NOT_FOUND.into_response();
    }
    match tokio::fs::read(&path).await {
        Ok(bytes) => ([(header::CONTENT_TYPE, content_type(name))], bytes).into_response(),
        Err(_) => StatusCode::NOT_FOUND.into_response(),
    }
}

async fn ws_upgrade(State(app): State<AppState>, ws: WebSocketUpgrade) -> Response {
    let (id, rx) = match app.hub.connect() {
        Ok(session) => session,
        Err(e) => return (StatusCode::SERVICE_UNAVAILABLE, e.to_string()).into_response(),
    };
    let hub = app.hub.clone();
    let failed_hub = app.hub.clone();
    ws.on_failed_upgrade(move |e| {
        log::warn!("websocket upgrade failed: {e}");
        failed_hub.disconnect(id);
    })
    .on_upgrade(move |socket| run_session(socket, hub, id, rx))
}

async fn run_session(
    socket: WebSocket,
    hub: Arc<SyncHub>,
    id: sync::SessionId,
    mut rx: tokio::sync::mpsc::UnboundedReceiver<sync::Frame>,
) {
    let (mut sink, mut stream) = socket.split();
    let writer = tokio::spawn(async move {
        while let Some(frame) = rx.recv().await {
            if sink.send(Message::Text(frame.as_ref().into())).await.is_err() {
                return;
            }
        }
        let _ = sink.send(Message::Close(None)).await;
    });

    while let Some(Ok(msg)) = stream.next().await {
        let disposition = match msg {
            Message::Text(text) => hub.handle_text(id, text.as_str()),
            Message::Binary(bytes) => match std::str::from_utf8(&bytes) {
                Ok(text) => hub.handle_text(id, text),
                Err(_) => hub.handle_text(id, ""),
            },
            Message::Close(_) => break,
            Message::Ping(_) | Message::Pong(_) => Disposition::Continue,
        };
        if disposition == Disposition::Close {
            break;
        }
    }
    // dropping the session's sender lets the writer flush and close
    hub.disconnect(id);
    let _ = writer.await;
}

/// Seeds the graph, prepares thumbnails, and serves until ctrl-c.
pub async fn run(config: ServerConfig) -> Result<(), StartupError> {
    let seed_config = config.clone();
    let state = tokio::task::spawn_blocking(move || seed_state(&seed_config))
        .await
        .expect("seeding task panicked")?;

    if let Some(dir) = config.dataset_dir.clone() {
        let thumb_size = config.thumb_size;
        let snapshot = state.clone();
        let report = tokio::task::spawn_blocking(move || {
            let ic = IngestConfig::new(dir).with_thumb_size(thumb_size)?;
            ingest::generate_thumbnails(&ic, &snapshot)
        })
        .await
        .expect("thumbnail task panicked");
        match report {
            Ok(r) => log::info!(
                "thumbnails: {} encoded, {} up to date, {} placeholders",
                r.encoded,
                r.skipped,
                r.placeholders.len()
            ),
            Err(e) => log::warn!("thumbnail generation failed: {e}"),
        }
    }

    log::info!(
        "serving {} pictures, {} clusters",
        state.node_count(),
        state.cluster_count()
    );
    let hub = Arc::new(SyncHub::new(state, config.max_clients));
    let listener = TcpListener::bind(SocketAddr::from(([0, 0, 0, 0], config.port)))
        .await
        .map_err(|source| StartupError::Bind {
            port: config.port,
            source,
        })?;

    let mut final_saver = None;
    if let Some(path) = &config.state_file {
        let mut saver = Autosaver::new(path);
        if path.exists() {
            saver.mark_saved(&hub);
        }
        tokio::spawn(sync::run_autosave(
            hub.clone(),
            saver,
            Duration::from_secs(config.autosave_secs),
        ));
        final_saver = Some(Autosaver::new(path));
    }

    let app = router(AppState {
        hub: hub.clone(),
        dataset_dir: config.dataset_dir.clone(),
    });
    log::info!("listening on port {}", config.port);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(StartupError::Serve)?;

    if let Some(mut saver) = final_saver {
        if let Err(e) = saver.tick(&hub) {
            log::error!("final save failed: {e}");
        }
    }
    Ok(())
}
