//! Minimal line-mode client, used by bots and tests.

use futures_util::{SinkExt, StreamExt};
use tokio::net::tcp::{OwnedReadHalf, OwnedWriteHalf};
use tokio::net::{TcpStream, ToSocketAddrs};
use tokio_util::codec::{FramedRead, FramedWrite, LinesCodec};

use crate::protocol::{ClientMsg, ServerMsg};
use crate::ChatError;

pub struct LineClient {
    pub tx: LineSender,
    pub rx: LineReceiver,
}

pub struct LineSender(FramedWrite<OwnedWriteHalf, LinesCodec>);
pub struct LineReceiver(FramedRead<OwnedReadHalf, LinesCodec>);

impl LineClient {
    pub async fn connect(addr: impl ToSocketAddrs) -> Result<Self, ChatError> {
        let stream = TcpStream::connect(addr).await?;
        stream.set_nodelay(true)?;
        let (r, w) = stream.into_split();
        Ok(Self {
            tx: LineSender(FramedWrite::new(w, LinesCodec::new())),
            rx: LineReceiver(FramedRead::new(r, LinesCodec::new())),
        })
    }

    pub async fn send(&mut self, msg: &ClientMsg) -> Result<(), ChatError> {
        self.tx.send(msg).await
    }

    pub async fn recv(&mut self) -> Result<Option<ServerMsg>, ChatError> {
        self.rx.recv().await
    }
}

impl LineSender {
    pub async fn send(&mut self, msg: &ClientMsg) -> Result<(), ChatError> {
        let line = serde_json::to_string(msg).map_err(|e| ChatError::BadMessage(e.to_string()))?;
        self.0.send(line).await.map_err(codec_err)
    }

    /// Send a raw line, bypassing serialization.
    pub async fn send_raw(&mut self, line: &str) -> Result<(), ChatError> {
        self.0.send(line).await.map_err(codec_err)
    }
}

impl LineReceiver {
    /// Next server message; `None` when the server closed the connection.
    pub async fn recv(&mut self) -> Result<Option<ServerMsg>, ChatError> {
        match self.0.next().await {
            None => Ok(None),
            Some(line) => {
                let line = line.map_err(codec_err)?;
                serde_json::from_str(&line)
                    .map(Some)
                    .map_err(|e| ChatError::BadMessage(e.to_string()))
            }
        }
    }
}

fn codec_err(e: tokio_util::codec::LinesCodecError) -> ChatError {
    match e {
        tokio_util::codec::LinesCodecError::Io(e) => ChatError::Io(e),
        other => ChatError::BadMessage(other.to_string()),
    }
}

/// What a typing bot saw during its run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BotTranscript {
    /// Every relayed key, in arrival order.
    pub keys: Vec<(u64, wordtutor_core::model::Role, char)>,
    pub errors: Vec<String>,
}

/// A scripted participant: join, wait for the session to start, type
/// `script` one key per message while reading, and return once `expect_keys`
/// relayed keys (from both sides) have arrived.
pub async fn run_typist(
    addr: std::net::SocketAddr,
    session: &str,
    role: wordtutor_core::model::Role,
    script: &str,
    expect_keys: usize,
) -> Result<BotTranscript, ChatError> {
    let LineClient { mut tx, mut rx } = LineClient::connect(addr).await?;
    tx.send(&ClientMsg::Join {
        session: session.to_string(),
        role,
        last_seq: None,
    })
    .await?;
    loop {
        match rx.recv().await? {
            Some(ServerMsg::Object { .. }) => break,
            Some(ServerMsg::Error { code }) => return Err(ChatError::BadMessage(format!("join refused: {code}"))),
            Some(_) => {}
            None => return Err(ChatError::BadMessage("server closed before start".into())),
        }
    }
    let keys: Vec<String> = script.chars().map(String::from).collect();
    let writer = tokio::spawn(async move {
        for (i, ch) in keys.into_iter().enumerate() {
            tx.send(&ClientMsg::Key {
                ch,
                client_ts: i as u64,
            })
            .await?;
        }
        Ok::<_, ChatError>(tx)
    });
    let mut out = BotTranscript::default();
    while out.keys.len() < expect_keys {
        match rx.recv().await? {
            Some(ServerMsg::Key { seq, sender, ch, .. }) => out.keys.push((seq, sender, ch)),
            Some(ServerMsg::Error { code }) => out.errors.push(code),
            Some(_) => {}
            None => break,
        }
    }
    let _tx = writer.await.map_err(|e| ChatError::BadMessage(e.to_string()))??;
    Ok(out)
}
