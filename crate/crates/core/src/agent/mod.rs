//! The learner side: word grounding, dialogue state, SARSA policy learning,
//! the rule-based baseline and tutoring-cost accounting.

mod cost;
mod episode;
mod grounding;
mod learning;
mod qtable;
mod rule;
mod state;

use thiserror::Error;

pub use cost::{classify_tutor_acts, CostLedger, CostSchedule, TutorEffort};
pub use episode::{
    is_incoherent, run_episode, Controller, EpisodeConfig, EpisodeResult, Exchange, GroundingUpdate, DEFAULT_TURN_CAP,
    INCOHERENCE_PENALTY, SUCCESS_REWARD,
};
pub use grounding::{GroundingModel, LAPLACE_ALPHA};
pub use learning::{
    heldout_accuracy, heldout_objects, perf_ratio, random_prior_grounding, run_learning, train_policy, Agent,
    CurvePoint, PerfCurve, RunConfig, RunResult, TrainConfig, TrainResult,
};
pub use qtable::{sarsa_update, select_action, select_action_among, LearningParams, QTable};
pub use rule::rule_based_policy;
pub use state::{all_states, encode_state, status_of, AgentAction, AgentState, Thresholds, TRACKED_TUTOR_ACTS};

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("invalid word `{0}`")]
    InvalidWord(String),
    #[error("label index {0} out of range")]
    InvalidLabel(usize),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("tutoring cost is zero; performance ratio undefined")]
    ZeroCost,
    #[error(transparent)]
    Sim(#[from] crate::sim::SimError),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
}
