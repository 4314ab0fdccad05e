//! Session layer: one writer over the shared graph, many subscribers.
//!
//! Every client message goes through [`SyncHub::handle_text`]. Mutations are
//! applied under a single lock in arrival order, and the resulting `applied`
//! frame is queued to every joined session before the lock is released, so all
//! sessions see the same gapless revision sequence. Node positions have no
//! message type at all; they stay in the browser.
//!
//! The hub is transport-agnostic. Outgoing frames are JSON text pushed onto an
//! unbounded channel per session; the websocket handler in [`crate::server`]
//! drains it, and tests drain it directly.

use std::collections::HashMap;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, MutexGuard};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use tokio::sync::mpsc::{unbounded_channel, UnboundedReceiver, UnboundedSender};

use crate::graph::{GraphError, GraphState, Mutation};
use crate::io::{export_graph, import_graph, GraphDocument, ImportError};

pub const DEFAULT_MAX_CLIENTS: usize = 64;
pub const MAX_CLIENTS_ENV: &str = "ANCHORGRAPH_MAX_CLIENTS";

/// One outgoing text frame.
pub type Frame = Arc<str>;
pub type SessionId = u64;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientMessage {
    Hello {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        client_seq: Option<u64>,
    },
    Mutate {
        mutation: Mutation,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        client_seq: Option<u64>,
    },
    RequestSnapshot {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        client_seq: Option<u64>,
    },
}

const CLIENT_TYPES: [&str; 3] = ["hello", "mutate", "request_snapshot"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectInfo {
    pub code: String,
    pub detail: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub client_seq: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Snapshot { revision: u64, state: GraphDocument },
    Applied { revision: u64, mutation: Mutation },
    Rejected { revision: u64, error: RejectInfo },
}

impl ServerMessage {
    pub fn revision(&self) -> u64 {
        match self {
            ServerMessage::Snapshot { revision, .. }
            | ServerMessage::Applied { revision, .. }
            | ServerMessage::Rejected { revision, .. } => *revision,
        }
    }

    fn to_frame(&self) -> Frame {
        serde_json::to_string(self)
            .expect("server messages always serialize")
            .into()
    }
}

/// Protocol-level rejection codes; graph errors use [`GraphError::code`].
pub mod codes {
    pub const BAD_HANDSHAKE: &str = "BadHandshake";
    pub const UNKNOWN_TYPE: &str = "UnknownType";
    pub const BAD_MESSAGE: &str = "BadMessage";
}

/// What the transport should do after a message has been handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Disposition {
    Continue,
    /// Flush the queued frames, then close the connection.
    Close,
}

#[derive(Debug, thiserror::Error)]
pub enum SyncError {
    #[error("too many clients (limit {0})")]
    TooManyClients(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stats {
    pub nodes: usize,
    pub clusters: usize,
    pub edges: usize,
    pub unlabeled: usize,
    pub revision: u64,
}

/// A consistent copy of the served state. `epoch` increments on every
/// server-side load, since a load resets the revision to 0.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub epoch: u64,
    pub state: GraphState,
}

struct SessionEntry {
    tx: UnboundedSender<Frame>,
    joined: bool,
}

struct Inner {
    state: GraphState,
    epoch: u64,
    sessions: HashMap<SessionId, SessionEntry>,
    next_session: SessionId,
}

impl Inner {
    fn snapshot_frame(&self) -> Frame {
        ServerMessage::Snapshot {
            revision: self.state.revision(),
            state: GraphDocument::from_state(&self.state),
        }
        .to_frame()
    }

    fn send(&mut self, id: SessionId, frame: Frame) {
        if let Some(s) = self.sessions.get(&id) {
            if s.tx.send(frame).is_err() {
                self.sessions.remove(&id);
            }
        }
    }

    fn broadcast(&mut self, frame: &Frame) {
        self.sessions
            .retain(|_, s| !s.joined || s.tx.send(frame.clone()).is_ok());
    }

    fn reject(&mut self, id: SessionId, code: &str, detail: String, client_seq: Option<u64>) {
        let frame = ServerMessage::Rejected {
            revision: self.state.revision(),
            error: RejectInfo {
                code: code.to_owned(),
                detail,
                client_seq,
            },
        }
        .to_frame();
        self.send(id, frame);
    }
}

pub struct SyncHub {
    inner: Mutex<Inner>,
    max_clients: usize,
}

impl SyncHub {
    pub fn new(state: GraphState, max_clients: usize) -> Self {
        SyncHub {
            inner: Mutex::new(Inner {
                state,
                epoch: 0,
                sessions: HashMap::new(),
                next_session: 1,
            }),
            max_clients,
        }
    }

    fn lock(&self) -> MutexGuard<'_, Inner> {
        self.inner.lock().expect("sync hub lock poisoned")
    }

    /// Registers a connection. It receives nothing until it says hello.
    pub fn connect(&self) -> Result<(SessionId, UnboundedReceiver<Frame>), SyncError> {
        let mut inner = self.lock();
        if inner.sessions.len() >= self.max_clients {
            return Err(SyncError::TooManyClients(self.max_clients));
        }
        let id = inner.next_session;
        inner.next_session += 1;
        let (tx, rx) = unbounded_channel();
        inner.sessions.insert(id, SessionEntry { tx, joined: false });
        Ok((id, rx))
    }

    pub fn disconnect(&self, id: SessionId) {
        self.lock().sessions.remove(&id);
    }

    pub fn session_count(&self) -> usize {
        self.lock().sessions.len()
    }

    /// Handles one text frame from a client.
    pub fn handle_text(&self, id: SessionId, text: &str) -> Disposition {
        let value: Value = match serde_json::from_str(text) {
            Ok(v) => v,
            Err(e) => return self.protocol_error(id, codes::BAD_MESSAGE, e.to_string(), None),
        };
        let client_seq = value.get("client_seq").and_then(Value::as_u64);
        let Some(kind) = value.get("type").and_then(Value::as_str) else {
            return self.protocol_error(id, codes::BAD_MESSAGE, "missing field `type`".into(), client_seq);
        };
        if !CLIENT_TYPES.contains(&kind) {
            return self.protocol_error(
                id,
                codes::UNKNOWN_TYPE,
                format!("unknown message type {kind:?}"),
                client_seq,
            );
        }
        match serde_json::from_value::<ClientMessage>(value) {
            Ok(msg) => self.handle_message(id, msg),
            Err(e) => self.protocol_error(id, codes::BAD_MESSAGE, e.to_string(), client_seq),
        }
    }

    fn protocol_error(
        &self,
        id: SessionId,
        code: &str,
        detail: String,
        client_seq: Option<u64>,
    ) -> Disposition {
        let mut inner = self.lock();
        let joined = inner.sessions.get(&id).is_some_and(|s| s.joined);
        if joined {
            inner.reject(id, code, detail, client_seq);
            Disposition::Continue
        } else {
            inner.reject(id, codes::BAD_HANDSHAKE, format!("expected hello first ({detail})"), client_seq);
            Disposition::Close
        }
    }

    pub fn handle_message(&self, id: SessionId, msg: ClientMessage) -> Disposition {
        let mut inner = self.lock();
        let Some(joined) = inner.sessions.get(&id).map(|s| s.joined) else {
            return Disposition::Close;
        };
        match msg {
            ClientMessage::Hello { client_seq } => {
                if joined {
                    inner.reject(id, codes::BAD_HANDSHAKE, "duplicate hello".into(), client_seq);
                    return Disposition::Close;
                }
                let frame = inner.snapshot_frame();
                inner.send(id, frame);
                if let Some(s) = inner.sessions.get_mut(&id) {
                    s.joined = true;
                }
            }
            _ if !joined => {
                inner.reject(id, codes::BAD_HANDSHAKE, "expected hello first".into(), None);
                return Disposition::Close;
            }
            ClientMessage::RequestSnapshot { .. } => {
                let frame = inner.snapshot_frame();
                inner.send(id, frame);
            }
            ClientMessage::Mutate {
                mutation,
                client_seq,
            } => match inner.state.apply(&mutation) {
                Ok(resolved) => {
                    let frame = ServerMessage::Applied {
                        revision: inner.state.revision(),
                        mutation: resolved,
                    }
                    .to_frame();
                    inner.broadcast(&frame);
                }
                Err(e) => inner.reject(id, e.code(), e.to_string(), client_seq),
            },
        }
        Disposition::Continue
    }

    /// Server-side load: validates the document, swaps it in at revision 0 and
    /// pushes a fresh snapshot to every joined session. On error nothing changes.
    pub fn load_graph(&self, bytes: &[u8]) -> Result<(), ImportError> {
        let state = import_graph(bytes)?;
        self.replace_state(state);
        Ok(())
    }

    pub fn replace_state(&self, mut state: GraphState) {
        state.set_revision(0);
        let mut inner = self.lock();
        inner.state = state;
        inner.epoch += 1;
        let frame = inner.snapshot_frame();
        inner.broadcast(&frame);
    }

    pub fn snapshot(&self) -> Snapshot {
        let inner = self.lock();
        Snapshot {
            epoch: inner.epoch,
            state: inner.state.clone(),
        }
    }

    pub fn revision(&self) -> u64 {
        self.lock().state.revision()
    }

    pub fn export(&self) -> Vec<u8> {
        export_graph(&self.snapshot().state)
    }

    pub fn stats(&self) -> Stats {
        let inner = self.lock();
        let s = &inner.state;
        Stats {
            nodes: s.node_count(),
            clusters: s.cluster_count(),
            edges: s.edge_count(),
            unlabeled: s.unlabeled_nodes().len(),
            revision: s.revision(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ReplicaError {
    #[error("undecodable frame: {0}")]
    Decode(#[from] serde_json::Error),
    #[error("applied message before any snapshot")]
    NoSnapshot,
    #[error("revision gap: expected {expected}, got {got}")]
    Gap { expected: u64, got: u64 },
    #[error("snapshot does not validate: {0}")]
    Snapshot(#[from] ImportError),
    #[error("replay failed: {0}")]
    Replay(#[from] GraphError),
}

/// Client-side copy of the graph, rebuilt from a snapshot and kept current by
/// replaying `applied` frames. Refuses any gap in the revision sequence.
#[derive(Debug, Default, Clone)]
pub struct Replica {
    state: Option<GraphState>,
}

impl Replica {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn state(&self) -> Option<&GraphState> {
        self.state.as_ref()
    }

    pub fn revision(&self) -> Option<u64> {
        self.state.as_ref().map(GraphState::revision)
    }

    pub fn receive(&mut self, frame: &str) -> Result<ServerMessage, ReplicaError> {
        let msg: ServerMessage = serde_json::from_str(frame)?;
        self.receive_message(&msg)?;
        Ok(msg)
    }

    pub fn receive_message(&mut self, msg: &ServerMessage) -> Result<(), ReplicaError> {
        match msg {
            ServerMessage::Snapshot { revision, state } => {
                let mut fresh = state.clone().into_state()?;
                fresh.set_revision(*revision);
                self.state = Some(fresh);
            }
            ServerMessage::Applied { revision, mutation } => {
                let state = self.state.as_mut().ok_or(ReplicaError::NoSnapshot)?;
                let expected = state.revision() + 1;
                if *revision != expected {
                    return Err(ReplicaError::Gap {
                        expected,
                        got: *revision,
                    });
                }
                state.apply(mutation)?;
            }
            ServerMessage::Rejected { .. } => {}
        }
        Ok(())
    }
}

/// Writes `bytes` to a temporary file beside `path`, then renames it into place.
pub fn write_atomically(path: &Path, bytes: &[u8]) -> io::Result<()> {
    use std::io::Write;

    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Periodic persistence of the served graph. A tick writes only when the
/// (epoch, revision) pair moved since the previous write.
pub struct Autosaver {
    path: PathBuf,
    last_saved: Option<(u64, u64)>,
}

impl Autosaver {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Autosaver {
            path: path.into(),
            last_saved: None,
        }
    }

    /// Treats the hub's current state as already persisted.
    pub fn mark_saved(&mut self, hub: &SyncHub) {
        let snap = hub.snapshot();
        self.last_saved = Some((snap.epoch, snap.state.revision()));
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Returns whether a file was written.
    pub fn tick(&mut self, hub: &SyncHub) -> io::Result<bool> {
        let snap = hub.snapshot();
        let key = (snap.epoch, snap.state.revision());
        if self.last_saved == Some(key) {
            return Ok(false);
        }
        write_atomically(&self.path, &export_graph(&snap.state))?;
        self.last_saved = Some(key);
        Ok(true)
    }
}

/// Runs [`Autosaver::tick`] every `interval`; write failures are logged and retried next tick.
pub async fn run_autosave(hub: Arc<SyncHub>, mut saver: Autosaver, interval: std::time::Duration) {
    let mut ticker = tokio::time::interval(interval);
    ticker.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
    ticker.tick().await;
    loop {
        ticker.tick().await;
        let hub = hub.clone();
        let result = tokio::task::spawn_blocking(move || {
            let r = saver.tick(&hub);
            (saver, r)
        })
        .await;
        match result {
            Ok((s, r)) => {
                saver = s;
                match r {
                    Ok(true) => log::info!("autosaved to {}", saver.path().display()),
                    Ok(false) => {}
                    Err(e) => log::error!("autosave to {} failed: {e}", saver.path().display()),
                }
            }
            Err(e) => {
                log::error!("autosave task panicked: {e}");
                return;
            }
        }
    }
}
