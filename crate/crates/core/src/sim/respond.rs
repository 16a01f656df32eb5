use rand::Rng;

use crate::model::{ActSequence, ConditionVector, Knowledge, VisualObject};

use super::model::{Level, SimModel};
use super::templates::realize;
use super::text::{delexicalize_text, detokenize, fill_slots, END};
use super::SimError;

/// Longest utterance generated at the word level.
pub const MAX_GENERATED_TOKENS: usize = 40;

/// Ground truth and conditions of one simulated dialogue.
#[derive(Debug, Clone, PartialEq)]
pub struct DialogueState {
    pub object: VisualObject,
    pub conditions: ConditionVector,
    pub tutor_turns: usize,
    pub finished: bool,
}

impl DialogueState {
    pub fn new(object: VisualObject) -> Self {
        Self {
            object,
            conditions: ConditionVector::default(),
            tutor_turns: 0,
            finished: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TutorResponse {
    pub acts: ActSequence,
    pub utterance: String,
    /// Conditions the tutor answered under (after the learner turn).
    pub conditions: ConditionVector,
    pub finished: bool,
}

impl SimModel {
    /// Play the tutor's next turn.
    ///
    /// Conditions are first updated from the learner turn, the tutor item is
    /// sampled under them, and the tutor's acts update them again. The
    /// dialogue is finished once both attributes are known.
    pub fn respond<R: Rng + ?Sized>(
        &self,
        learner_text: &str,
        learner_acts: &ActSequence,
        state: &mut DialogueState,
        rng: &mut R,
    ) -> Result<TutorResponse, SimError> {
        if state.finished {
            return Err(SimError::Finished);
        }
        let lexicon = self.lexicon();
        let object = &state.object;
        let cond = state.conditions.after_learner(learner_acts, object, lexicon);
        let context = self.context_tokens(learner_text);
        let color = object.word(lexicon, crate::model::Category::Color);
        let shape = object.word(lexicon, crate::model::Category::Shape);
        let (acts, utterance) = match self.level() {
            Level::Act => {
                let item = self.sample(&context, &cond, rng);
                let acts = ActSequence::parse_abstract(&item)
                    .map_err(|e| SimError::Format(e.to_string()))?
                    .instantiate(object, lexicon);
                let utterance = realize(&acts, self.templates(), rng)?;
                (acts, utterance)
            }
            Level::Utt => {
                let template = self.sample(&context, &cond, rng);
                let acts = self.acts_of(&template, object);
                let utterance = fill_slots(&template, Some(color), Some(shape))
                    .ok_or_else(|| SimError::UnfillableSlot(template.clone()))?;
                (acts, utterance)
            }
            Level::Word => {
                let mut ctx = context;
                let mut out = Vec::new();
                while out.len() < MAX_GENERATED_TOKENS {
                    let tok = self.sample(&ctx, &cond, rng);
                    if tok == END {
                        break;
                    }
                    ctx.push(tok.clone());
                    out.push(tok);
                }
                let template = detokenize(&out);
                let acts = self.acts_of(&template, object);
                let utterance = fill_slots(&template, Some(color), Some(shape))
                    .ok_or_else(|| SimError::UnfillableSlot(template.clone()))?;
                (acts, utterance)
            }
        };
        let mut next = cond.after_tutor(&acts);
        // An utterance that names the right word without a recognised act
        // still counts as telling the learner.
        if acts.is_empty() {
            let delex = delexicalize_text(&utterance, lexicon);
            for (k, marker) in [
                (crate::model::Category::Color, "{color}"),
                (crate::model::Category::Shape, "{shape}"),
            ] {
                if delex.contains(marker) {
                    next.set_state(k, Knowledge::Known);
                }
            }
        }
        state.conditions = next;
        state.tutor_turns += 1;
        state.finished = next.both_known();
        Ok(TutorResponse {
            acts,
            utterance,
            conditions: cond,
            finished: state.finished,
        })
    }

    fn acts_of(&self, template: &str, object: &VisualObject) -> ActSequence {
        self.templates()
            .acts_for(template)
            .map(|a| a.instantiate(object, self.lexicon()))
            .unwrap_or_default()
    }
}
