use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{ActSequence, Category, Context, DialogueActType};

/// Tutor act types kept in the agent state; the rest are dropped.
pub const TRACKED_TUTOR_ACTS: [DialogueActType; 4] = [
    DialogueActType::Asking,
    DialogueActType::Inform,
    DialogueActType::Checking,
    DialogueActType::OfferHelp,
];

/// Confidence thresholds for the attribute status.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    /// At or above: known (status 2).
    pub pos: f64,
    /// Strictly above (and below `pos`): tentative (status 1).
    pub mid: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { pos: 0.9, mid: 0.5 }
    }
}

/// Discrete dialogue state seen by the learner policy.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AgentState {
    /// 0 unknown, 1 tentative, 2 known
    pub c_status: u8,
    pub s_status: u8,
    pub prev_tutor_acts: BTreeSet<DialogueActType>,
    pub pre_context: Context,
}

impl AgentState {
    pub fn status(&self, category: Category) -> u8 {
        match category {
            Category::Color => self.c_status,
            Category::Shape => self.s_status,
        }
    }

    pub fn both_known(&self) -> bool {
        self.c_status == 2 && self.s_status == 2
    }

    /// Category the dialogue is about: the context's, unless it is already
    /// known, else the first not-known one.
    pub fn focus(&self) -> Category {
        if let Some(k) = self.pre_context.category() {
            if self.status(k) < 2 {
                return k;
            }
        }
        Category::ALL
            .into_iter()
            .find(|k| self.status(*k) < 2)
            .unwrap_or(Category::Color)
    }
}

impl fmt::Display for AgentState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let acts: Vec<&str> = self.prev_tutor_acts.iter().map(|a| a.canonical()).collect();
        write!(
            f,
            "({},{},{{{}}},{})",
            self.c_status,
            self.s_status,
            acts.join("|"),
            self.pre_context.name()
        )
    }
}

pub fn status_of(confidence: f64, explicit: bool, t: &Thresholds) -> u8 {
    if explicit || confidence >= t.pos {
        2
    } else if confidence > t.mid {
        1
    } else {
        0
    }
}

/// Encode the policy state. `explicit[k]` is true when the tutor informed or
/// confirmed attribute `k` in this dialogue.
pub fn encode_state(
    confidences: [f64; 2],
    explicit: [bool; 2],
    thresholds: &Thresholds,
    prev_tutor_acts: &ActSequence,
    pre_context: Context,
) -> AgentState {
    AgentState {
        c_status: status_of(confidences[0], explicit[0], thresholds),
        s_status: status_of(confidences[1], explicit[1], thresholds),
        prev_tutor_acts: prev_tutor_acts
            .iter()
            .map(|a| a.act_type)
            .filter(|t| TRACKED_TUTOR_ACTS.contains(t))
            .collect(),
        pre_context,
    }
}

/// Learner moves available to the policy, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentAction {
    AskWhColor,
    AskWhShape,
    GuessPolarColor,
    GuessPolarShape,
    DontKnow,
    Acknowledge,
    Listen,
    RequestRepetition,
}

impl AgentAction {
    pub const ALL: [AgentAction; 8] = [
        AgentAction::AskWhColor,
        AgentAction::AskWhShape,
        AgentAction::GuessPolarColor,
        AgentAction::GuessPolarShape,
        AgentAction::DontKnow,
        AgentAction::Acknowledge,
        AgentAction::Listen,
        AgentAction::RequestRepetition,
    ];

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|a| *a == self).expect("listed")
    }

    pub fn ask_wh(k: Category) -> Self {
        match k {
            Category::Color => AgentAction::AskWhColor,
            Category::Shape => AgentAction::AskWhShape,
        }
    }

    pub fn guess_polar(k: Category) -> Self {
        match k {
            Category::Color => AgentAction::GuessPolarColor,
            Category::Shape => AgentAction::GuessPolarShape,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AgentAction::AskWhColor => "ask_wh(color)",
            AgentAction::AskWhShape => "ask_wh(shape)",
            AgentAction::GuessPolarColor => "guess_polar(color)",
            AgentAction::GuessPolarShape => "guess_polar(shape)",
            AgentAction::DontKnow => "dont_know",
            AgentAction::Acknowledge => "acknowledge",
            AgentAction::Listen => "listen",
            AgentAction::RequestRepetition => "request_repetition",
        }
    }
}

impl fmt::Display for AgentAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Every state the encoder can produce.
pub fn all_states() -> Vec<AgentState> {
    let mut out = Vec::new();
    for mask in 0u32..(1 << TRACKED_TUTOR_ACTS.len()) {
        let acts: BTreeSet<_> = TRACKED_TUTOR_ACTS
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, a)| *a)
            .collect();
        for c in 0..3 {
            for s in 0..3 {
                for p in Context::ALL {
                    out.push(AgentState {
                        c_status: c,
                        s_status: s,
                        prev_tutor_acts: acts.clone(),
                        pre_context: p,
                    });
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(s: &str) -> ActSequence {
        ActSequence::parse_abstract(s).unwrap()
    }

    #[test]
    fn thresholds() {
        let t = Thresholds::default();
        assert_eq!(status_of(0.95, false, &t), 2);
        assert_eq!(status_of(0.6, false, &t), 1);
        assert_eq!(status_of(0.4, false, &t), 0);
        assert_eq!(status_of(0.5, false, &t), 0);
        assert_eq!(status_of(0.9, false, &t), 2);
    }

    #[test]
    fn explicit_information_overrides() {
        let s = encode_state(
            [0.1, 0.1],
            [true, false],
            &Thresholds::default(),
            &seq("inform(color)"),
            Context::Color,
        );
        assert_eq!((s.c_status, s.s_status), (2, 0));
        assert_eq!(
            s.prev_tutor_acts.iter().copied().collect::<Vec<_>>(),
            [DialogueActType::Inform]
        );
    }

    #[test]
    fn untracked_acts_are_dropped() {
        let s = encode_state(
            [0.0; 2],
            [false; 2],
            &Thresholds::default(),
            &seq("ack()+focus(shape)"),
            Context::Shape,
        );
        assert!(s.prev_tutor_acts.is_empty());
    }

    #[test]
    fn state_space_is_finite_and_distinct() {
        let all = all_states();
        assert_eq!(all.len(), 16 * 36);
        let set: BTreeSet<_> = all.iter().cloned().collect();
        assert_eq!(set.len(), all.len());
    }

    #[test]
    fn action_indices_are_canonical() {
        for (i, a) in AgentAction::ALL.iter().enumerate() {
            assert_eq!(a.index(), i);
        }
    }
}
