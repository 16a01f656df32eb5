use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::phrases::LearnerIntent;
use crate::model::{ActCategory, ActSequence, Category, Context, DialogueActType, Polarity, VisualObject};
use crate::sim::{DialogueState, SimModel};

use super::cost::{CostLedger, CostSchedule};
use super::grounding::GroundingModel;
use super::qtable::{sarsa_update, select_action_among, LearningParams, QTable};
use super::rule::rule_based_policy;
use super::state::{encode_state, AgentAction, AgentState, Thresholds};
use super::AgentError;

/// Reward for finishing a dialogue with both attributes known.
pub const SUCCESS_REWARD: f64 = 10.0;
/// Penalty per incoherent learner action.
pub const INCOHERENCE_PENALTY: f64 = 1.0;
/// Most learner/tutor exchanges per dialogue.
pub const DEFAULT_TURN_CAP: usize = 30;

/// How the learner picks its moves.
pub enum Controller<'a> {
    Rule,
    /// Greedy on a fixed table, over the actions it has evidence for.
    Greedy(&'a QTable<AgentState>),
    /// ε-greedy with on-policy updates.
    Sarsa {
        q: &'a mut QTable<AgentState>,
        params: LearningParams,
    },
}

impl Controller<'_> {
    /// Learned controllers only consider coherent actions.
    fn choose<R: Rng + ?Sized>(
        &self,
        s: &AgentState,
        has_word: [bool; 2],
        first_turn: bool,
        rng: &mut R,
    ) -> AgentAction {
        let ok = |a: usize| !is_incoherent(s, AgentAction::ALL[a], has_word, first_turn);
        match self {
            Controller::Rule => rule_based_policy(s),
            Controller::Greedy(q) => AgentAction::ALL[q.argmax_among(s, ok, true)],
            Controller::Sarsa { q, params } => AgentAction::ALL[select_action_among(q, s, ok, params.epsilon, rng)],
        }
    }

    fn update(&mut self, s: &AgentState, a: AgentAction, r: f64, next: Option<(&AgentState, AgentAction)>) {
        if let Controller::Sarsa { q, params } = self {
            sarsa_update(
                q,
                s,
                a.index(),
                r,
                next.map(|(s2, a2)| (s2, a2.index())),
                params.alpha,
                params.gamma,
            );
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpisodeConfig {
    pub schedule: CostSchedule,
    pub thresholds: Thresholds,
    pub turn_cap: usize,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            schedule: CostSchedule::default(),
            thresholds: Thresholds::default(),
            turn_cap: DEFAULT_TURN_CAP,
        }
    }
}

/// One piece of evidence the learner took from the tutor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundingUpdate {
    pub word: String,
    pub category: Category,
    pub label: usize,
    pub polarity: Polarity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub state: AgentState,
    pub action: AgentAction,
    pub learner_text: String,
    pub learner_acts: ActSequence,
    pub tutor_acts: ActSequence,
    pub tutor_utterance: String,
    pub cost: f64,
    pub penalty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub transcript: Vec<Exchange>,
    pub ledger: CostLedger,
    pub penalties: f64,
    /// Both attributes known at the end.
    pub completed: bool,
    /// Stopped by the turn cap.
    pub capped: bool,
    pub reward: f64,
    pub updates: Vec<GroundingUpdate>,
}

/// Whether `action` is out of place in `state`.
///
/// | action | incoherent when |
/// |---|---|
/// | ask_wh(k) | `k` already known |
/// | guess_polar(k) | `k` known, or no word to guess with |
/// | dont_know | the tutor did not just ask or check |
/// | acknowledge | the tutor did not just inform or check |
/// | listen | the tutor just asked, or it is the learner's opening move |
/// | request_repetition | the tutor did not just inform |
pub fn is_incoherent(state: &AgentState, action: AgentAction, has_word: [bool; 2], first_turn: bool) -> bool {
    let prev = &state.prev_tutor_acts;
    let asked = prev.contains(&DialogueActType::Asking);
    match action {
        AgentAction::AskWhColor => state.c_status == 2,
        AgentAction::AskWhShape => state.s_status == 2,
        AgentAction::GuessPolarColor => state.c_status == 2 || !has_word[0],
        AgentAction::GuessPolarShape => state.s_status == 2 || !has_word[1],
        AgentAction::DontKnow => !(asked || prev.contains(&DialogueActType::Checking)),
        AgentAction::Acknowledge => {
            asked || !(prev.contains(&DialogueActType::Inform) || prev.contains(&DialogueActType::Checking))
        }
        AgentAction::Listen => asked || first_turn,
        AgentAction::RequestRepetition => !prev.contains(&DialogueActType::Inform),
    }
}

fn has_words(g: &GroundingModel) -> [bool; 2] {
    Category::ALL.map(|k| g.words(k).next().is_some())
}

fn confidences(g: &GroundingModel, object: &VisualObject) -> [f64; 2] {
    Category::ALL.map(|k| g.classify_confidence(k, object).1)
}

fn intent(action: AgentAction, state: &AgentState, g: &GroundingModel, object: &VisualObject) -> Option<LearnerIntent> {
    let k = state.focus();
    Some(match action {
        AgentAction::AskWhColor => LearnerIntent::AskWh(Category::Color),
        AgentAction::AskWhShape => LearnerIntent::AskWh(Category::Shape),
        AgentAction::GuessPolarColor | AgentAction::GuessPolarShape => {
            let k = if action == AgentAction::GuessPolarColor {
                Category::Color
            } else {
                Category::Shape
            };
            match g.classify_confidence(k, object).0 {
                Some(w) => LearnerIntent::Polar(k, w),
                None => LearnerIntent::DontKnow(k),
            }
        }
        AgentAction::DontKnow => LearnerIntent::DontKnow(k),
        AgentAction::Acknowledge => LearnerIntent::Ack,
        AgentAction::Listen => return None,
        AgentAction::RequestRepetition => LearnerIntent::RequestRepetition(k),
    })
}

/// Evidence from one tutor turn, given what the learner just said.
fn evidence(tutor: &ActSequence, learner: &ActSequence, object: &VisualObject) -> (Vec<GroundingUpdate>, [bool; 2]) {
    let mut out = Vec::new();
    let mut explicit = [false; 2];
    for a in tutor.iter() {
        if a.act_type != DialogueActType::Inform {
            continue;
        }
        if let (Some(k), Some(w)) = (a.category.and_then(ActCategory::single), &a.word) {
            out.push(GroundingUpdate {
                word: w.clone(),
                category: k,
                label: object.feature_label(k),
                polarity: Polarity::Pos,
            });
            explicit[k as usize] = true;
        }
    }
    let polarity = if tutor.contains_type(DialogueActType::Rejection) {
        Some(Polarity::Neg)
    } else if tutor.contains_type(DialogueActType::Acknowledgment) {
        Some(Polarity::Pos)
    } else {
        None
    };
    if let Some(pol) = polarity {
        for a in learner.iter() {
            if let (Some(k), Some(w)) = (a.category.and_then(ActCategory::single), &a.word) {
                out.push(GroundingUpdate {
                    word: w.clone(),
                    category: k,
                    label: object.feature_label(k),
                    polarity: pol,
                });
                if pol == Polarity::Pos {
                    explicit[k as usize] = true;
                }
            }
        }
    }
    (out, explicit)
}

/// Play one dialogue about `object` against the simulated tutor.
///
/// The learner's grounding model is updated in place as the tutor informs,
/// confirms and rejects. Each exchange costs the tutor effort it contained
/// plus [`INCOHERENCE_PENALTY`] for an out-of-place move; finishing with both
/// attributes known earns [`SUCCESS_REWARD`]. With a SARSA controller the
/// table is updated after every exchange.
pub fn run_episode<R: Rng + ?Sized>(
    controller: &mut Controller<'_>,
    tutor: &SimModel,
    object: &VisualObject,
    grounding: &mut GroundingModel,
    config: &EpisodeConfig,
    rng: &mut R,
) -> Result<EpisodeResult, AgentError> {
    let mut result = EpisodeResult {
        transcript: Vec::new(),
        ledger: CostLedger::default(),
        penalties: 0.0,
        completed: false,
        capped: false,
        reward: 0.0,
        updates: Vec::new(),
    };
    let mut dstate = DialogueState::new(object.clone());
    let mut explicit = [false; 2];
    let mut context = Context::None;
    let mut prev_tutor = ActSequence::default();
    let mut state = encode_state(
        confidences(grounding, object),
        explicit,
        &config.thresholds,
        &prev_tutor,
        context,
    );
    if state.both_known() {
        result.completed = true;
        result.reward = SUCCESS_REWARD;
        return Ok(result);
    }
    let mut action = controller.choose(&state, has_words(grounding), true, rng);
    for turn in 0..config.turn_cap {
        let has_word = has_words(grounding);
        let penalty = if is_incoherent(&state, action, has_word, turn == 0) {
            INCOHERENCE_PENALTY
        } else {
            0.0
        };
        let (text, lacts) = match intent(action, &state, grounding, object) {
            Some(i) => (i.realize(rng), i.acts()),
            None => (String::new(), ActSequence::default()),
        };
        let resp = tutor.respond(&text, &lacts, &mut dstate, rng)?;
        let cost = result.ledger.charge_turn(&resp.acts, &config.schedule);
        let (updates, told) = evidence(&resp.acts, &lacts, object);
        for u in &updates {
            grounding.update(&u.word, u.category, u.label, u.polarity)?;
        }
        result.updates.extend(updates);
        for k in 0..2 {
            explicit[k] |= told[k];
        }
        context = dstate.conditions.pre_context;
        prev_tutor = resp.acts.clone();
        let next = encode_state(
            confidences(grounding, object),
            explicit,
            &config.thresholds,
            &prev_tutor,
            context,
        );
        result.penalties += penalty;
        result.transcript.push(Exchange {
            state: state.clone(),
            action,
            learner_text: text,
            learner_acts: lacts,
            tutor_acts: resp.acts,
            tutor_utterance: resp.utterance,
            cost,
            penalty,
        });
        let done = next.both_known();
        let stuck = dstate.finished && !done;
        let last = turn + 1 == config.turn_cap;
        let r = -(cost + penalty) + if done { SUCCESS_REWARD } else { 0.0 };
        if done || stuck || last {
            controller.update(&state, action, r, None);
            result.completed = done;
            result.capped = last && !done && !stuck;
            break;
        }
        let next_action = controller.choose(&next, has_words(grounding), false, rng);
        controller.update(&state, action, r, Some((&next, next_action)));
        state = next;
        action = next_action;
    }
    result.reward = if result.completed { SUCCESS_REWARD } else { 0.0 } - result.ledger.total - result.penalties;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn st(c: u8, s: u8, acts: &[DialogueActType]) -> AgentState {
        AgentState {
            c_status: c,
            s_status: s,
            prev_tutor_acts: acts.iter().copied().collect::<BTreeSet<_>>(),
            pre_context: Context::None,
        }
    }

    #[test]
    fn coherence_table() {
        use DialogueActType::*;
        assert!(is_incoherent(
            &st(0, 0, &[Asking]),
            AgentAction::Acknowledge,
            [true; 2],
            false
        ));
        assert!(!is_incoherent(
            &st(0, 0, &[Inform]),
            AgentAction::Acknowledge,
            [true; 2],
            false
        ));
        assert!(is_incoherent(
            &st(0, 0, &[]),
            AgentAction::Acknowledge,
            [true; 2],
            false
        ));
        assert!(is_incoherent(&st(0, 0, &[]), AgentAction::Listen, [true; 2], true));
        assert!(!is_incoherent(&st(0, 0, &[]), AgentAction::Listen, [true; 2], false));
        assert!(is_incoherent(&st(2, 0, &[]), AgentAction::AskWhColor, [true; 2], false));
        assert!(is_incoherent(
            &st(1, 0, &[]),
            AgentAction::GuessPolarColor,
            [false; 2],
            false
        ));
        assert!(!is_incoherent(
            &st(1, 0, &[]),
            AgentAction::GuessPolarColor,
            [true; 2],
            false
        ));
        assert!(is_incoherent(&st(0, 0, &[]), AgentAction::DontKnow, [true; 2], false));
        assert!(!is_incoherent(
            &st(0, 0, &[Checking]),
            AgentAction::DontKnow,
            [true; 2],
            false
        ));
        assert!(is_incoherent(
            &st(0, 0, &[Asking]),
            AgentAction::Listen,
            [true; 2],
            false
        ));
        assert!(is_incoherent(
            &st(0, 0, &[Asking]),
            AgentAction::RequestRepetition,
            [true; 2],
            false
        ));
    }

    #[test]
    fn correction_evidence() {
        use crate::model::{Color, Shape};
        let obj = VisualObject::new(Color::Red, Shape::Square);
        let tutor: ActSequence = "reject()+inform(color=sako)".parse().unwrap();
        let learner: ActSequence = "ask(color=suzuli)".parse().unwrap();
        let (u, told) = evidence(&tutor, &learner, &obj);
        assert_eq!(told, [true, false]);
        assert_eq!(u.len(), 2);
        assert_eq!((u[0].word.as_str(), u[0].polarity), ("sako", Polarity::Pos));
        assert_eq!((u[1].word.as_str(), u[1].polarity), ("suzuli", Polarity::Neg));
        let ack: ActSequence = "ack()".parse().unwrap();
        let (u, told) = evidence(&ack, &"ask(color=sako)".parse().unwrap(), &obj);
        assert_eq!(told, [true, false]);
        assert_eq!(u[0].polarity, Polarity::Pos);
    }
}
