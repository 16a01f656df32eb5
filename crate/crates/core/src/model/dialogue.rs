use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::acts::ActSequence;
use super::conditions::ConditionVector;
use super::object::VisualObject;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Tutor,
    Learner,
}

impl Role {
    pub const ALL: [Role; 2] = [Role::Tutor, Role::Learner];

    pub fn name(self) -> &'static str {
        match self {
            Role::Tutor => "tutor",
            Role::Learner => "learner",
        }
    }

    pub fn other(self) -> Role {
        match self {
            Role::Tutor => Role::Learner,
            Role::Learner => Role::Tutor,
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tutor" => Ok(Role::Tutor),
            "learner" => Ok(Role::Learner),
            other => Err(format!("unknown role `{other}`")),
        }
    }
}

/// One keystroke as relayed and logged by the chat service.
///
/// Serializes to the log-line schema; the sender-side clock is kept in memory
/// only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharEvent {
    pub seq: u64,
    pub server_ts: u64,
    #[serde(rename = "session")]
    pub session_id: String,
    pub object_index: usize,
    pub sender: Role,
    pub ch: char,
    #[serde(default, skip_serializing)]
    pub client_ts: u64,
}

/// Characters that may be stored in the log: printable characters and space.
pub fn is_storable_char(ch: char) -> bool {
    !ch.is_control()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhenomenonTag {
    Overlap,
    SelfCorrection,
    SelfRepetition,
    Continuation,
    Filler,
}

impl PhenomenonTag {
    pub const ALL: [PhenomenonTag; 5] = [
        PhenomenonTag::Overlap,
        PhenomenonTag::SelfCorrection,
        PhenomenonTag::SelfRepetition,
        PhenomenonTag::Continuation,
        PhenomenonTag::Filler,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PhenomenonTag::Overlap => "overlap",
            PhenomenonTag::SelfCorrection => "self_correction",
            PhenomenonTag::SelfRepetition => "self_repetition",
            PhenomenonTag::Continuation => "continuation",
            PhenomenonTag::Filler => "filler",
        }
    }
}

/// A maximal run of one participant's characters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    /// Position of the turn in its dialogue at segmentation time. Stable
    /// under cleaning, so ids may have holes afterwards.
    pub id: u32,
    pub speaker: Role,
    pub start_ms: u64,
    pub end_ms: u64,
    pub text: String,
    #[serde(default)]
    pub acts: ActSequence,
    #[serde(default)]
    pub phenomena: BTreeSet<PhenomenonTag>,
    /// Sequence numbers of the events forming this turn.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub events: Vec<u64>,
    /// Dialogue conditions in force when the turn started.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conditions: Option<ConditionVector>,
}

impl Turn {
    pub fn new(id: u32, speaker: Role, start_ms: u64, end_ms: u64, text: impl Into<String>) -> Self {
        Self {
            id,
            speaker,
            start_ms,
            end_ms,
            text: text.into(),
            acts: ActSequence::default(),
            phenomena: BTreeSet::new(),
            events: Vec::new(),
            conditions: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    pub color_identified: bool,
    pub shape_identified: bool,
}

/// All turns about one visual object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dialogue {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object: Option<VisualObject>,
    pub turns: Vec<Turn>,
    #[serde(default)]
    pub outcome: Outcome,
}

impl Dialogue {
    pub fn new(id: impl Into<String>, object: Option<VisualObject>) -> Self {
        Self {
            id: id.into(),
            object,
            turns: Vec::new(),
            outcome: Outcome::default(),
        }
    }

    pub fn turn(&self, id: u32) -> Option<&Turn> {
        self.turns.iter().find(|t| t.id == id)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub dialogues: Vec<Dialogue>,
}

impl Corpus {
    pub fn new(dialogues: Vec<Dialogue>) -> Self {
        Self { dialogues }
    }

    pub fn turn_count(&self) -> usize {
        self.dialogues.iter().map(|d| d.turns.len()).sum()
    }

    pub fn turns(&self) -> impl Iterator<Item = &Turn> {
        self.dialogues.iter().flat_map(|d| d.turns.iter())
    }
}

/// Concatenate one sender's characters from a contiguous event stream.
pub fn sender_text(events: &[CharEvent], sender: Role) -> String {
    events.iter().filter(|e| e.sender == sender).map(|e| e.ch).collect()
}
