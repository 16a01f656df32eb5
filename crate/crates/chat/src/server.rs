//! Session hub and transports.

use std::collections::{BTreeMap, HashMap};
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use futures_util::{future, Sink, SinkExt, Stream, StreamExt};
use log::{debug, info, warn};
use serde::{Deserialize, Serialize};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::mpsc;
use tokio_tungstenite::tungstenite::Message;
use tokio_util::codec::{FramedRead, FramedWrite, LinesCodec};
use wordtutor_core::model::{CharEvent, Role};

use crate::protocol::{ClientMsg, ServerMsg, SessionStatus};
use crate::session::{Delivery, Session, SessionConfig};
use crate::ChatError;

/// Longest accepted line in TCP mode.
const MAX_LINE: usize = 64 * 1024;

/// Sessions a server hosts, as read from the session-config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServerConfig {
    pub sessions: Vec<SessionConfig>,
}

impl ServerConfig {
    pub fn from_json(bytes: &[u8]) -> Result<Self, ChatError> {
        serde_json::from_slice(bytes).map_err(|e| ChatError::InvalidConfig(e.to_string()))
    }
}

struct Peer {
    conn: u64,
    tx: mpsc::UnboundedSender<String>,
}

struct Slot {
    session: Session,
    peers: BTreeMap<Role, Peer>,
    log: Option<File>,
}

impl Slot {
    fn deliver(&self, deliveries: Vec<Delivery>) {
        for d in deliveries {
            match d {
                Delivery::To(role, msg) => {
                    if let Some(p) = self.peers.get(&role) {
                        let _ = p.tx.send(msg.to_json());
                    }
                }
                Delivery::All(msg) => {
                    let line = msg.to_json();
                    for p in self.peers.values() {
                        let _ = p.tx.send(line.clone());
                    }
                }
            }
        }
    }

    fn append(&mut self, event: &CharEvent) -> Result<(), ChatError> {
        if let Some(f) = &mut self.log {
            let mut line = serde_json::to_vec(event).expect("CharEvent serializes");
            line.push(b'\n');
            f.write_all(&line)?;
        }
        Ok(())
    }
}

/// All sessions of one server. Each session is guarded by its own lock, so
/// its events are handled one at a time while sessions run in parallel.
pub struct Hub {
    sessions: HashMap<String, Arc<Mutex<Slot>>>,
    epoch: Instant,
    next_conn: AtomicU64,
}

fn is_safe_id(id: &str) -> bool {
    !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
        && !id.starts_with('.')
}

impl Hub {
    /// With a `log_dir`, each session appends its events to
    /// `<log_dir>/<session_id>.jsonl` as they happen.
    pub fn new(config: ServerConfig, log_dir: Option<&Path>) -> Result<Arc<Self>, ChatError> {
        let mut sessions = HashMap::new();
        for c in config.sessions {
            if !is_safe_id(&c.session_id) {
                return Err(ChatError::InvalidConfig(format!(
                    "session id `{}` is not file-name safe",
                    c.session_id
                )));
            }
            let log = match log_dir {
                Some(dir) => {
                    std::fs::create_dir_all(dir)?;
                    Some(
                        OpenOptions::new()
                            .create(true)
                            .append(true)
                            .open(log_path(dir, &c.session_id))?,
                    )
                }
                None => None,
            };
            let id = c.session_id.clone();
            let slot = Slot {
                session: Session::new(c)?,
                peers: BTreeMap::new(),
                log,
            };
            if sessions.insert(id.clone(), Arc::new(Mutex::new(slot))).is_some() {
                return Err(ChatError::InvalidConfig(format!("duplicate session `{id}`")));
            }
        }
        Ok(Arc::new(Self {
            sessions,
            epoch: Instant::now(),
            next_conn: AtomicU64::new(1),
        }))
    }

    fn now_ms(&self) -> u64 {
        self.epoch.elapsed().as_millis() as u64
    }

    fn slot(&self, id: &str) -> Result<&Arc<Mutex<Slot>>, ChatError> {
        self.sessions
            .get(id)
            .ok_or_else(|| ChatError::UnknownSession(id.to_string()))
    }

    pub fn session_ids(&self) -> Vec<String> {
        let mut v: Vec<String> = self.sessions.keys().cloned().collect();
        v.sort();
        v
    }

    /// The session's events in log-file format.
    pub fn export_log(&self, id: &str) -> Result<Vec<u8>, ChatError> {
        Ok(lock(self.slot(id)?).session.export_log())
    }

    pub fn status(&self, id: &str) -> Result<SessionStatus, ChatError> {
        Ok(lock(self.slot(id)?).session.status())
    }

    fn join(
        self: &Arc<Self>,
        id: &str,
        role: Role,
        last_seq: Option<u64>,
        conn: u64,
        tx: &mpsc::UnboundedSender<String>,
    ) -> Result<Arc<Mutex<Slot>>, ChatError> {
        let slot = self.slot(id)?.clone();
        let mut g = lock(&slot);
        let was_active = g.session.status() == SessionStatus::Active;
        let deliveries = g.session.join(role, last_seq, self.now_ms())?;
        g.peers.insert(role, Peer { conn, tx: tx.clone() });
        g.deliver(deliveries);
        if !was_active {
            if let Some(deadline) = g.session.deadline_ms() {
                self.spawn_timer(slot.clone(), deadline);
            }
        }
        drop(g);
        Ok(slot)
    }

    fn spawn_timer(self: &Arc<Self>, slot: Arc<Mutex<Slot>>, deadline: u64) {
        let hub = self.clone();
        tokio::spawn(async move {
            tokio::time::sleep(Duration::from_millis(deadline.saturating_sub(hub.now_ms()))).await;
            let mut g = lock(&slot);
            let d = g.session.check_deadline(hub.now_ms().max(deadline));
            if !d.is_empty() {
                info!("session {} reached its time limit", g.session.id());
            }
            g.deliver(d);
        });
    }

    fn key(&self, slot: &Mutex<Slot>, role: Role, ch: &str, client_ts: u64) -> Result<(), ChatError> {
        let mut g = lock(slot);
        let (event, deliveries) = g.session.key(role, ch, client_ts, self.now_ms())?;
        if let Some(e) = &event {
            g.append(e)?;
        }
        g.deliver(deliveries);
        Ok(())
    }

    fn advance(&self, slot: &Mutex<Slot>, role: Role) -> Result<(), ChatError> {
        let mut g = lock(slot);
        let d = g.session.advance(role, self.now_ms())?;
        g.deliver(d);
        Ok(())
    }

    fn leave(&self, slot: &Mutex<Slot>, role: Role, conn: u64) {
        let mut g = lock(slot);
        if g.peers.get(&role).is_some_and(|p| p.conn == conn) {
            g.peers.remove(&role);
            g.session.disconnect(role);
            debug!("{role} left session {}", g.session.id());
        }
    }
}

fn lock(slot: &Mutex<Slot>) -> std::sync::MutexGuard<'_, Slot> {
    slot.lock().unwrap_or_else(|p| p.into_inner())
}

pub fn log_path(dir: &Path, session_id: &str) -> PathBuf {
    dir.join(format!("{session_id}.jsonl"))
}

/// Run one client connection to completion, whatever the transport.
pub async fn handle_connection<I, O>(hub: Arc<Hub>, mut incoming: I, outgoing: O)
where
    I: Stream<Item = String> + Unpin,
    O: Sink<String> + Unpin + Send + 'static,
{
    let conn = hub.next_conn.fetch_add(1, Ordering::Relaxed);
    let (tx, mut rx) = mpsc::unbounded_channel::<String>();
    let writer = tokio::spawn(async move {
        let mut out = outgoing;
        while let Some(line) = rx.recv().await {
            if out.send(line).await.is_err() {
                break;
            }
        }
    });
    let mut joined: Option<(Arc<Mutex<Slot>>, Role)> = None;
    while let Some(line) = incoming.next().await {
        let result = match serde_json::from_str::<ClientMsg>(&line) {
            Err(e) => Err(ChatError::BadMessage(e.to_string())),
            Ok(msg) => match (&joined, msg) {
                (
                    None,
                    ClientMsg::Join {
                        session,
                        role,
                        last_seq,
                    },
                ) => hub
                    .join(&session, role, last_seq, conn, &tx)
                    .map(|slot| joined = Some((slot, role))),
                (Some(_), ClientMsg::Join { .. }) => Err(ChatError::AlreadyJoined),
                (None, _) => Err(ChatError::NotJoined),
                (Some((slot, role)), ClientMsg::Key { ch, client_ts }) => hub.key(slot, *role, &ch, client_ts),
                (Some((slot, role)), ClientMsg::Advance) => hub.advance(slot, *role),
            },
        };
        if let Err(e) = result {
            debug!("connection {conn}: {e}");
            let _ = tx.send(
                ServerMsg::Error {
                    code: e.code().to_string(),
                }
                .to_json(),
            );
        }
    }
    if let Some((slot, role)) = joined {
        hub.leave(&slot, role, conn);
    }
    drop(tx);
    let _ = writer.await;
}

/// Accept connections forever, serving WebSocket and line-mode clients on
/// the same port.
pub async fn serve(listener: TcpListener, hub: Arc<Hub>) -> std::io::Result<()> {
    loop {
        let (stream, peer) = listener.accept().await?;
        let hub = hub.clone();
        tokio::spawn(async move {
            if let Err(e) = handle_socket(stream, hub).await {
                warn!("connection from {peer}: {e}");
            }
        });
    }
}

async fn is_http(stream: &TcpStream) -> std::io::Result<bool> {
    let mut buf = [0u8; 4];
    loop {
        let n = stream.peek(&mut buf).await?;
        if n == 0 || n >= 4 || !b"GET ".starts_with(&buf[..n]) {
            return Ok(n >= 4 && &buf == b"GET ");
        }
        tokio::time::sleep(Duration::from_millis(1)).await;
    }
}

async fn handle_socket(stream: TcpStream, hub: Arc<Hub>) -> Result<(), ChatError> {
    stream.set_nodelay(true)?;
    if is_http(&stream).await? {
        let ws = tokio_tungstenite::accept_async(stream)
            .await
            .map_err(|e| ChatError::BadMessage(format!("websocket handshake: {e}")))?;
        let (sink, source) = ws.split();
        let incoming = source
            .take_while(|m| future::ready(m.is_ok()))
            .filter_map(|m| {
                future::ready(match m {
                    Ok(Message::Text(t)) => Some(t.to_string()),
                    _ => None,
                })
            })
            .boxed();
        let outgoing =
            sink.with(|s: String| future::ready(Ok::<_, tokio_tungstenite::tungstenite::Error>(Message::Text(s))));
        handle_connection(hub, incoming, Box::pin(outgoing)).await;
    } else {
        let (r, w) = stream.into_split();
        let incoming = FramedRead::new(r, LinesCodec::new_with_max_length(MAX_LINE))
            .take_while(|l| future::ready(l.is_ok()))
            .filter_map(|l| future::ready(l.ok()))
            .boxed();
        let outgoing = FramedWrite::new(w, LinesCodec::new());
        handle_connection(hub, incoming, outgoing).await;
    }
    Ok(())
}
