//! Surface phrase banks used by the synthetic corpus generator and by the
//! learner agent when it has to say something.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::model::{ActCategory, ActSequence, AttributeLexicon, Category, DialogueAct, DialogueActType};

/// What a learner turn is meant to do, before it is put into words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LearnerIntent {
    AskWh(Category),
    DontKnow(Category),
    Polar(Category, String),
    Statement(Category, String),
    Ack,
    RequestRepetition(Category),
}

impl LearnerIntent {
    pub fn acts(&self) -> ActSequence {
        let act = match self {
            LearnerIntent::AskWh(k) | LearnerIntent::DontKnow(k) => DialogueAct::ask(*k),
            LearnerIntent::Polar(k, w) => DialogueAct::ask(*k).with_word(w.clone()),
            LearnerIntent::Statement(k, w) => DialogueAct::inform(*k, w.clone()),
            LearnerIntent::Ack => DialogueAct::ack(),
            LearnerIntent::RequestRepetition(k) => DialogueAct::new(DialogueActType::Repetition).with_category(*k),
        };
        ActSequence::new(vec![act])
    }

    /// Pick one phrasing.
    pub fn realize<R: Rng + ?Sized>(&self, rng: &mut R) -> String {
        let pick = |opts: &[&str], rng: &mut R| opts.choose(rng).expect("non-empty").to_string();
        match self {
            LearnerIntent::AskWh(Category::Color) => pick(
                &[
                    "what color is this?",
                    "what is the color?",
                    "and the color?",
                    "what colour is it?",
                ],
                rng,
            ),
            LearnerIntent::AskWh(Category::Shape) => pick(
                &[
                    "what shape is this?",
                    "what is the shape?",
                    "and the shape?",
                    "what is this shape called?",
                ],
                rng,
            ),
            LearnerIntent::DontKnow(k) => {
                pick(&["i don't know the {k}", "not sure about the {k}"], rng).replace("{k}", k.name())
            }
            LearnerIntent::Polar(_, w) => pick(&["is it {w}?", "is this {w}?", "{w}?"], rng).replace("{w}", w),
            LearnerIntent::Statement(_, w) => pick(&["it's {w}", "{w}", "a {w}", "this is {w}"], rng).replace("{w}", w),
            LearnerIntent::Ack => pick(&["okay", "ok, i see", "got it", "okay."], rng),
            LearnerIntent::RequestRepetition(k) => {
                pick(&["can you repeat the {k}?", "sorry, the {k} again?"], rng).replace("{k}", k.name())
            }
        }
    }
}

/// Rough act reading of free learner text: lexicon words become polar
/// questions (text ending in `?`) or statements; otherwise keywords decide
/// between a question about an attribute, a repetition request and an
/// acknowledgment. Unrecognized text yields an empty sequence.
pub fn interpret_learner_text(text: &str, lexicon: &AttributeLexicon) -> ActSequence {
    let tokens = super::tokenize(text);
    let question = tokens.last().is_some_and(|t| t == "?");
    let mut acts = Vec::new();
    for t in &tokens {
        if let Some((k, _)) = lexicon.lookup(t) {
            acts.push(if question {
                DialogueAct::ask(k).with_word(t.clone())
            } else {
                DialogueAct::inform(k, t.clone())
            });
        }
    }
    if acts.is_empty() {
        let has = |w: &str| tokens.iter().any(|t| t == w);
        let category = if has("color") || has("colour") {
            Some(Category::Color)
        } else if has("shape") {
            Some(Category::Shape)
        } else {
            None
        };
        if has("repeat") || has("again") {
            acts.push(DialogueAct::new(DialogueActType::Repetition).with_category(category.unwrap_or(Category::Color)));
        } else if let Some(k) = category {
            acts.push(DialogueAct::ask(k));
        } else if ["ok", "okay", "yes", "got", "thanks", "i see"].iter().any(|w| has(w)) {
            acts.push(DialogueAct::ack());
        }
    }
    ActSequence::new(acts)
}

fn category_name(c: Option<ActCategory>) -> &'static str {
    match c {
        Some(ActCategory::Shape) => "shape",
        Some(ActCategory::Both) => "object",
        _ => "color",
    }
}

/// Phrase one (instantiated) tutor act.
pub fn tutor_phrase<R: Rng + ?Sized>(act: &DialogueAct, rng: &mut R) -> String {
    let pick = |opts: &[&str], rng: &mut R| opts.choose(rng).expect("non-empty").to_string();
    let k = category_name(act.category);
    let w = act.word.as_deref().unwrap_or("");
    match act.act_type {
        DialogueActType::Inform => match act.category {
            Some(ActCategory::Shape) => pick(&["it's a {w}", "this is a {w}", "the shape is {w}", "{w}"], rng),
            _ => pick(&["it's {w}", "this is {w}", "the color is {w}", "{w}"], rng),
        }
        .replace("{w}", w),
        DialogueActType::Acknowledgment => pick(&["yes", "yes, well done", "great job", "right", "correct"], rng),
        DialogueActType::Rejection => pick(&["no", "nope", "not quite"], rng),
        DialogueActType::Asking => match act.category {
            Some(ActCategory::Both) | None => pick(&["what is this object?", "what is this?"], rng),
            _ => pick(&["what {k} is this?", "and {k}?", "what is the {k}?"], rng).replace("{k}", k),
        },
        DialogueActType::Focus => {
            pick(&["let's move to the {k}", "now the {k}", "what about the {k}"], rng).replace("{k}", k)
        }
        DialogueActType::Clarification => pick(&["this is for {k}"], rng).replace("{k}", k),
        DialogueActType::Checking => pick(&["get it?", "ok?", "got it?"], rng),
        DialogueActType::Repetition => pick(&["can you repeat the {k}?"], rng).replace("{k}", k),
        DialogueActType::OfferHelp => pick(&["need help?", "do you need help?"], rng),
    }
}

/// Join act phrases into one utterance in act order.
pub fn join_phrases(parts: &[String]) -> String {
    let mut out = String::new();
    for p in parts {
        if !out.is_empty() {
            out.push_str(if out.ends_with(['?', '.', '!']) { " " } else { ", " });
        }
        out.push_str(p);
    }
    out
}
