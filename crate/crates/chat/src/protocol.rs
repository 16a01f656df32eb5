//! JSON messages exchanged with clients, one per WebSocket text frame or per
//! line in TCP mode.

use serde::{Deserialize, Serialize};
use wordtutor_core::model::{AttributeLexicon, Role, VisualObject};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMsg {
    Join {
        session: String,
        role: Role,
        /// On reconnection: the last seq the client displayed. Every later
        /// event is replayed after the ack.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        last_seq: Option<u64>,
    },
    /// `ch` must hold exactly one character.
    Key {
        ch: String,
        #[serde(default)]
        client_ts: u64,
    },
    Advance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Waiting,
    Active,
    Ended,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndReason {
    Completed,
    TimeLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMsg {
    Joined {
        role: Role,
        fade_ms: u64,
        status: SessionStatus,
        index: usize,
        object: VisualObject,
        /// Tutor only.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dictionary: Option<AttributeLexicon>,
    },
    Key {
        seq: u64,
        sender: Role,
        ch: char,
        server_ts: u64,
    },
    /// Sent to both clients when the session starts and on every advance.
    Object {
        index: usize,
        object: VisualObject,
    },
    End {
        reason: EndReason,
    },
    Error {
        code: String,
    },
}

impl ServerMsg {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("server messages serialize")
    }
}
