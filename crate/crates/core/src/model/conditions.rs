//! Dialogue-context conditions and the update rules shared by the corpus
//! generator, the condition annotator and the tutor simulation.
//!
//! | event                                   | effect                                  |
//! |-----------------------------------------|-----------------------------------------|
//! | learner names the correct word for `k`  | `k` -> known, context -> `k`            |
//! | learner names a wrong word for `k`      | `k` -> guessed (unless already known)   |
//! | learner asks about `k` without a word   | guessed `k` -> unknown, context -> `k`  |
//! | learner focuses on `k`                  | context -> `k`                          |
//! | tutor informs `k`                       | `k` -> known, context -> `k`            |
//! | tutor focuses/asks/clarifies `k`        | context -> `k`                          |
//! | acknowledgments, rejections, checking   | no change                               |
//!
//! A turn touching both attributes sets the context to `both`.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::acts::{ActCategory, ActSequence, DialogueActType};
use super::lexicon::{AttributeLexicon, Category};
use super::object::VisualObject;

/// Learner knowledge of one attribute, as seen by the tutor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Knowledge {
    Unknown,
    Guessed,
    Known,
}

impl Knowledge {
    pub const ALL: [Knowledge; 3] = [Knowledge::Unknown, Knowledge::Guessed, Knowledge::Known];

    pub fn name(self) -> &'static str {
        match self {
            Knowledge::Unknown => "unknown",
            Knowledge::Guessed => "guessed",
            Knowledge::Known => "known",
        }
    }
}

/// Attribute currently under discussion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Context {
    Color,
    Shape,
    Both,
    None,
}

impl Context {
    pub const ALL: [Context; 4] = [Context::Color, Context::Shape, Context::Both, Context::None];

    pub fn name(self) -> &'static str {
        match self {
            Context::Color => "color",
            Context::Shape => "shape",
            Context::Both => "both",
            Context::None => "none",
        }
    }

    pub fn category(self) -> Option<Category> {
        match self {
            Context::Color => Some(Category::Color),
            Context::Shape => Some(Category::Shape),
            _ => None,
        }
    }
}

impl From<Category> for Context {
    fn from(c: Category) -> Self {
        match c {
            Category::Color => Context::Color,
            Category::Shape => Context::Shape,
        }
    }
}

/// The three dialogue conditions conditioning the tutor model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ConditionVector {
    pub c_state: Knowledge,
    pub s_state: Knowledge,
    pub pre_context: Context,
}

impl Default for ConditionVector {
    fn default() -> Self {
        Self::new(Knowledge::Unknown, Knowledge::Unknown, Context::None)
    }
}

impl fmt::Display for ConditionVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{}",
            self.c_state.name(),
            self.s_state.name(),
            self.pre_context.name()
        )
    }
}

/// Number of slots in a condition vector.
pub const CONDITION_ARITY: usize = 3;

impl ConditionVector {
    pub const fn new(c_state: Knowledge, s_state: Knowledge, pre_context: Context) -> Self {
        Self {
            c_state,
            s_state,
            pre_context,
        }
    }

    /// All 36 values, in `Ord` order.
    pub fn all() -> Vec<ConditionVector> {
        let mut out = Vec::with_capacity(36);
        for c in Knowledge::ALL {
            for s in Knowledge::ALL {
                for p in Context::ALL {
                    out.push(Self::new(c, s, p));
                }
            }
        }
        out
    }

    pub fn state(&self, category: Category) -> Knowledge {
        match category {
            Category::Color => self.c_state,
            Category::Shape => self.s_state,
        }
    }

    pub fn set_state(&mut self, category: Category, k: Knowledge) {
        match category {
            Category::Color => self.c_state = k,
            Category::Shape => self.s_state = k,
        }
    }

    pub fn both_known(&self) -> bool {
        self.c_state == Knowledge::Known && self.s_state == Knowledge::Known
    }

    /// The attribute a speaker would naturally talk about next: the current
    /// context if it is a single attribute, otherwise the first not yet known.
    pub fn focus(&self) -> Category {
        if let Some(c) = self.pre_context.category() {
            return c;
        }
        if self.c_state != Knowledge::Known || self.s_state == Knowledge::Known {
            Category::Color
        } else {
            Category::Shape
        }
    }

    /// Conditions after a learner turn on `object`.
    pub fn after_learner(&self, acts: &ActSequence, object: &VisualObject, lexicon: &AttributeLexicon) -> Self {
        let mut next = *self;
        let mut touched = Touched::default();
        for act in acts.iter() {
            if let Some(word) = &act.word {
                let category = act
                    .category
                    .and_then(ActCategory::single)
                    .or_else(|| lexicon.lookup(word).map(|(c, _)| c))
                    .or_else(|| self.pre_context.category());
                if let Some(k) = category {
                    if object.word(lexicon, k) == word {
                        next.set_state(k, Knowledge::Known);
                    } else if next.state(k) != Knowledge::Known {
                        next.set_state(k, Knowledge::Guessed);
                    }
                    touched.add(k.into());
                }
            } else if let Some(c) = act.category {
                if act.act_type == DialogueActType::Asking {
                    for k in Category::ALL {
                        if c.covers(k) && next.state(k) == Knowledge::Guessed {
                            next.set_state(k, Knowledge::Unknown);
                        }
                    }
                }
                touched.add(c);
            }
        }
        next.pre_context = touched.context(self.pre_context);
        next
    }

    /// Conditions after a tutor turn on `object`.
    pub fn after_tutor(&self, acts: &ActSequence) -> Self {
        let mut next = *self;
        let mut touched = Touched::default();
        for act in acts.iter() {
            match act.act_type {
                DialogueActType::Inform => {
                    if let Some(c) = act.category {
                        for k in Category::ALL {
                            if c.covers(k) {
                                next.set_state(k, Knowledge::Known);
                            }
                        }
                        touched.add(c);
                    }
                }
                DialogueActType::Focus
                | DialogueActType::Asking
                | DialogueActType::Clarification
                | DialogueActType::Repetition => {
                    if let Some(c) = act.category {
                        touched.add(c);
                    }
                }
                _ => {}
            }
        }
        next.pre_context = touched.context(self.pre_context);
        next
    }
}

#[derive(Default)]
struct Touched {
    color: bool,
    shape: bool,
}

impl Touched {
    fn add(&mut self, c: ActCategory) {
        match c {
            ActCategory::Color => self.color = true,
            ActCategory::Shape => self.shape = true,
            ActCategory::Both => {
                self.color = true;
                self.shape = true;
            }
        }
    }

    fn context(&self, previous: Context) -> Context {
        match (self.color, self.shape) {
            (true, true) => Context::Both,
            (true, false) => Context::Color,
            (false, true) => Context::Shape,
            (false, false) => previous,
        }
    }
}

/// Number of differing slots between two condition vectors.
pub fn hamming(a: &ConditionVector, b: &ConditionVector) -> usize {
    (a.c_state != b.c_state) as usize + (a.s_state != b.s_state) as usize + (a.pre_context != b.pre_context) as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Color, DialogueAct, Shape};
    use std::collections::HashSet;

    #[test]
    fn enumeration_is_exhaustive_and_unique() {
        let all = ConditionVector::all();
        assert_eq!(all.len(), 36);
        assert_eq!(all.iter().collect::<HashSet<_>>().len(), 36);
    }

    #[test]
    fn hamming_examples() {
        let a = ConditionVector::new(Knowledge::Unknown, Knowledge::Known, Context::Color);
        let b = ConditionVector::new(Knowledge::Unknown, Knowledge::Known, Context::Shape);
        assert_eq!(hamming(&a, &a), 0);
        assert_eq!(hamming(&a, &b), 1);
    }

    #[test]
    fn hamming_is_a_metric() {
        let all = ConditionVector::all();
        for a in &all {
            assert_eq!(hamming(a, a), 0);
            for b in &all {
                let d = hamming(a, b);
                assert!(d <= CONDITION_ARITY);
                assert_eq!(d, hamming(b, a));
                assert_eq!(d == 0, a == b);
                for c in &all {
                    assert!(hamming(a, c) <= d + hamming(b, c));
                }
            }
        }
    }

    #[test]
    fn learner_guess_updates() {
        let lex = AttributeLexicon::default();
        let obj = VisualObject::new(Color::Red, Shape::Square);
        let start = ConditionVector::default();
        let wrong = ActSequence::new(vec![DialogueAct::ask(Category::Color).with_word("suzuli")]);
        let c = start.after_learner(&wrong, &obj, &lex);
        assert_eq!(
            c,
            ConditionVector::new(Knowledge::Guessed, Knowledge::Unknown, Context::Color)
        );
        let right = ActSequence::new(vec![
            DialogueAct::inform(Category::Color, "sako"),
            DialogueAct::inform(Category::Shape, "burchak"),
        ]);
        let c = c.after_learner(&right, &obj, &lex);
        assert!(c.both_known());
        assert_eq!(c.pre_context, Context::Both);
    }

    #[test]
    fn wh_question_withdraws_a_wrong_guess() {
        let lex = AttributeLexicon::default();
        let obj = VisualObject::new(Color::Red, Shape::Square);
        let c = ConditionVector::new(Knowledge::Guessed, Knowledge::Unknown, Context::Color);
        let wh = ActSequence::new(vec![DialogueAct::ask(Category::Color)]);
        assert_eq!(c.after_learner(&wh, &obj, &lex).c_state, Knowledge::Unknown);
    }

    #[test]
    fn untyped_word_resolved_through_lexicon() {
        let lex = AttributeLexicon::default();
        let obj = VisualObject::new(Color::Red, Shape::Circle);
        let acts = ActSequence::new(vec![DialogueAct::ask(ActCategory::Both).with_word("wakaki")]);
        // category `both` is not a single attribute, so the lexicon decides
        let c = ConditionVector::default().after_learner(&acts, &obj, &lex);
        assert_eq!(c.s_state, Knowledge::Known);
    }

    #[test]
    fn tutor_inform_and_focus() {
        let c = ConditionVector::new(Knowledge::Guessed, Knowledge::Unknown, Context::Color);
        let acts = ActSequence::parse_abstract("reject(color)+inform(color=sako)+focus(shape)").unwrap();
        let n = c.after_tutor(&acts);
        assert_eq!(
            n,
            ConditionVector::new(Knowledge::Known, Knowledge::Unknown, Context::Both)
        );
        let ack = ActSequence::new(vec![DialogueAct::ack()]);
        assert_eq!(n.after_tutor(&ack), n);
    }

    #[test]
    fn focus_rule() {
        let c = ConditionVector::new(Knowledge::Known, Knowledge::Unknown, Context::None);
        assert_eq!(c.focus(), Category::Shape);
        let c = ConditionVector::new(Knowledge::Known, Knowledge::Unknown, Context::Color);
        assert_eq!(c.focus(), Category::Color);
    }
}
