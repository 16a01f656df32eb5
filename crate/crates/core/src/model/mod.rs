//! Shared domain vocabulary: roles, keystrokes, turns, dialogues, acts,
//! objects, the invented lexicon and dialogue conditions.

mod acts;
mod conditions;
mod dialogue;
mod lexicon;
mod object;

use thiserror::Error;

pub use acts::{canonical_act_string, ActCategory, ActParseError, ActSequence, DialogueAct, DialogueActType, Polarity};
pub use conditions::{hamming, ConditionVector, Context, Knowledge, CONDITION_ARITY};
pub use dialogue::{is_storable_char, sender_text, CharEvent, Corpus, Dialogue, Outcome, PhenomenonTag, Role, Turn};
pub use lexicon::{is_valid_word, AttributeLexicon, Category, Color, Shape};
pub use object::{grid, make_object_sequence, VisualObject, FEATURE_NOISE};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("word `{0}` is used more than once")]
    DuplicateWord(String),
    #[error("lexicon has no {category} word for `{label}`")]
    MissingEntry { category: Category, label: String },
    #[error("`{0}` is not a valid lexicon word")]
    InvalidWord(String),
    #[error("invalid lexicon: {}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidLexicon(Vec<ModelError>),
    #[error("requested an empty object sequence")]
    EmptyRequest,
}
