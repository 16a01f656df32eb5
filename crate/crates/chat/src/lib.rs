//! Character-level relay chat for two-party tutoring sessions.
//!
//! Every keystroke is a message. The server stamps it with a per-session
//! sequence number and server time, appends it to the session log and
//! broadcasts it to both participants (the sender included, so all clients
//! render one authoritative order). Deletions and multi-character input are
//! refused. The tutor steps through the session's objects; the session ends
//! after the last object or when its time limit runs out.
//!
//! One listening port speaks both transports: a connection opening with an
//! HTTP `GET` is upgraded to WebSocket (one JSON message per text frame),
//! anything else is treated as newline-delimited JSON.

pub mod client;
pub mod protocol;
pub mod server;
pub mod session;

use thiserror::Error;
use wordtutor_core::model::{ModelError, Role};

pub use client::{run_typist, BotTranscript, LineClient};
pub use protocol::{ClientMsg, EndReason, ServerMsg, SessionStatus};
pub use server::{serve, Hub, ServerConfig};
pub use session::{Delivery, Session, SessionConfig};

#[derive(Debug, Error)]
pub enum ChatError {
    #[error("role {0} already taken")]
    RoleTaken(Role),
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("session has not started")]
    NotActive,
    #[error("session has ended")]
    Ended,
    #[error("exactly one character per key message")]
    NotSingleChar,
    #[error("control and deletion characters are not relayed")]
    ControlChar,
    #[error("only the tutor may advance")]
    NotTutor,
    #[error("join a session first")]
    NotJoined,
    #[error("connection already joined")]
    AlreadyJoined,
    #[error("malformed message: {0}")]
    BadMessage(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ChatError {
    /// Code sent to clients in `error` messages.
    pub fn code(&self) -> &'static str {
        match self {
            ChatError::RoleTaken(_) => "role_taken",
            ChatError::UnknownSession(_) => "unknown_session",
            ChatError::NotActive => "not_active",
            ChatError::Ended => "ended",
            ChatError::NotSingleChar => "not_single_char",
            ChatError::ControlChar => "deletion_not_permitted",
            ChatError::NotTutor => "not_tutor",
            ChatError::NotJoined => "not_joined",
            ChatError::AlreadyJoined => "already_joined",
            ChatError::BadMessage(_) => "bad_message",
            ChatError::InvalidConfig(_) | ChatError::Model(_) | ChatError::Io(_) => "internal",
        }
    }
}
