//! From raw keystroke logs to annotated corpora.

mod clean;
pub mod io;
mod phenomena;
pub mod phrases;
mod segment;
mod stats;
mod synth;
mod tokenize;

use thiserror::Error;

use crate::model::ModelError;

pub use clean::{clean, Change, ChangeKind, CleanReport, CleaningRules, ExcludedSpan, DEFAULT_EMOTICONS};
pub use phenomena::{annotate_phenomena, detect_overlaps, detect_phenomena, FILLERS};
pub use phrases::interpret_learner_text;
pub use segment::{dialogue_id, segment_turns, DEFAULT_GAP_MS};
pub use stats::{compute_stats, CorpusStats};
pub use synth::{
    default_tutor_policy, generate_synthetic_corpus, Cadence, CompiledPolicy, LearnerParams, Pause, PolicyRow,
    SynthOutput, SynthParams, TutorPolicy,
};
pub use tokenize::{is_punct_token, tokenize};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("events out of order in session `{session}`: seq {seq} after {previous}")]
    Unordered { session: String, seq: u64, previous: u64 },
    #[error("overlapping exclusion spans in dialogue `{0}`")]
    OverlappingSpans(String),
    #[error("invalid cleaning rules: {0}")]
    Rules(String),
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("line {line}: {source}")]
    Parse { line: usize, source: serde_json::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
