//! Compound n-gram tutor simulation.
//!
//! The model estimates `P(t | w_1..w_k, c_1..c_m)` by maximum likelihood,
//! where `t` is the tutor's next utterance, act sequence or token, the `w`
//! are the most recent context tokens and the `c` the dialogue conditions.
//! Unseen keys back off on the word context only; conditions that never
//! occurred with a context are matched by Hamming distance.

mod model;
mod respond;
mod table;
mod templates;
pub mod text;

use thiserror::Error;

pub use model::{
    observations, turn_conditions, Level, Observation, PredictedItem, Prediction, SimModel, Source, DEFAULT_N,
};
pub use respond::{DialogueState, TutorResponse, MAX_GENERATED_TOKENS};
pub use table::{CountTable, ItemCounts, NGramKey};
pub use templates::{default_template, realize, TemplateStore};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("no tutor turns to train on")]
    EmptyCorpus,
    #[error("missing act or condition annotation: {0}")]
    Unannotated(String),
    #[error("n must be at least 1")]
    InvalidOrder,
    #[error("cannot realize an empty act sequence")]
    EmptyActs,
    #[error("template slot cannot be filled: {0}")]
    UnfillableSlot(String),
    #[error("dialogue already finished")]
    Finished,
    #[error("bad model data: {0}")]
    Format(String),
}
