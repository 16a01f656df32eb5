//! Turn-level evaluation of a tutor simulation: accuracy and KL divergence
//! against the empirical distributions of an evaluation corpus.

mod distribution;
mod kld;
mod report;

use thiserror::Error;

pub use distribution::{Distribution, SUM_TOLERANCE};
pub use kld::{kld, DEFAULT_EPSILON};
pub use report::{accuracy, evaluate, EvalReport, KeyResult};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("evaluation corpus has no tutor turns")]
    EmptyCorpus,
    #[error("model is {model}-level, evaluation asked for {requested}")]
    LevelMismatch {
        model: crate::sim::Level,
        requested: crate::sim::Level,
    },
    #[error(transparent)]
    Sim(#[from] crate::sim::SimError),
}
