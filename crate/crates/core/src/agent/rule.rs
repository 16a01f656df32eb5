use crate::model::DialogueActType;

use super::state::{AgentAction, AgentState};

/// Hand-written baseline.
///
/// | state | action |
/// |---|---|
/// | both known | acknowledge |
/// | tutor just asked, focus tentative | guess_polar(focus) |
/// | tutor just asked, focus unknown | dont_know |
/// | focus unknown | ask_wh(focus) |
/// | focus tentative | guess_polar(focus) |
///
/// The focus is the context category unless that one is known already, else
/// the first attribute (color before shape) that is not known.
pub fn rule_based_policy(state: &AgentState) -> AgentAction {
    if state.both_known() {
        return AgentAction::Acknowledge;
    }
    let k = state.focus();
    let status = state.status(k);
    if state.prev_tutor_acts.contains(&DialogueActType::Asking) {
        return if status >= 1 {
            AgentAction::guess_polar(k)
        } else {
            AgentAction::DontKnow
        };
    }
    if status == 0 {
        AgentAction::ask_wh(k)
    } else {
        AgentAction::guess_polar(k)
    }
}
