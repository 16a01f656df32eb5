//! Toolkit for interactive grounded word learning dialogues.
//!
//! - [`model`]: shared domain types.
//! - [`corpus`]: keystroke logs to turns, phenomena, cleaning, statistics and
//!   a synthetic corpus generator.
//! - [`sim`]: compound n-gram tutor simulation.
//! - [`eval`]: turn-level accuracy and KL divergence of a simulation.
//! - [`agent`]: grounding model, SARSA learner policy, rule-based baseline and
//!   tutoring-cost accounting.

pub mod agent;
pub mod corpus;
pub mod eval;
pub mod model;
pub mod sim;
