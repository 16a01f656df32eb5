use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::phrases::join_phrases;
use crate::model::{ActCategory, ActSequence, Category, DialogueAct, DialogueActType};

use crate::corpus::tokenize;

use super::text::{detokenize, fill_slots};
use super::SimError;

/// Delexicalized utterance templates per canonical (delexicalized) act
/// sequence, with corpus counts.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TemplateStore {
    entries: BTreeMap<String, BTreeMap<String, u64>>,
}

impl TemplateStore {
    pub fn add(&mut self, acts: &ActSequence, template: &str, count: u64) {
        *self
            .entries
            .entry(acts.delexicalized().to_string())
            .or_default()
            .entry(template.to_string())
            .or_insert(0) += count;
    }

    /// Add a template unless one of its slots has no matching `inform` in
    /// `acts`. Returns whether it was stored.
    pub fn add_if_fillable(&mut self, acts: &ActSequence, template: &str) -> bool {
        let (c, s) = slot_presence(acts);
        if (template.contains("{color}") && !c) || (template.contains("{shape}") && !s) {
            return false;
        }
        self.add(acts, template, 1);
        true
    }

    pub fn templates(&self, acts: &ActSequence) -> Option<&BTreeMap<String, u64>> {
        self.entries.get(&acts.delexicalized().to_string())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Most frequent act sequence seen with this template (ties: canonical
    /// order).
    /// Templates are compared after tokenization, so spacing and case do
    /// not matter.
    pub fn acts_for(&self, template: &str) -> Option<ActSequence> {
        let norm = |t: &str| detokenize(&tokenize(t));
        let want = norm(template);
        let mut best: Option<(&String, u64)> = None;
        for (acts, ts) in &self.entries {
            let c: u64 = ts.iter().filter(|(t, _)| norm(t) == want).map(|(_, c)| *c).sum();
            if c > 0 && best.is_none_or(|(_, b)| c > b) {
                best = Some((acts, c));
            }
        }
        best.and_then(|(a, _)| ActSequence::parse_abstract(a).ok())
    }

    /// Check every template's slots can be filled from its act sequence.
    pub fn validate(&self) -> Result<(), SimError> {
        for (acts, ts) in &self.entries {
            let seq = ActSequence::parse_abstract(acts).map_err(|e| SimError::Format(e.to_string()))?;
            let (c, s) = slot_presence(&seq);
            for t in ts.keys() {
                if (t.contains("{color}") && !c) || (t.contains("{shape}") && !s) {
                    return Err(SimError::UnfillableSlot(format!("{t} for {acts}")));
                }
            }
        }
        Ok(())
    }
}

fn slot_presence(acts: &ActSequence) -> (bool, bool) {
    let has = |k: Category| {
        acts.iter()
            .any(|a| a.act_type == DialogueActType::Inform && a.category.is_some_and(|c| c.covers(k)))
    };
    (has(Category::Color), has(Category::Shape))
}

fn slot_words(acts: &ActSequence) -> (Option<&str>, Option<&str>) {
    let find = |k: ActCategory| {
        acts.iter()
            .find(|a| a.category == Some(k) && a.word.is_some())
            .and_then(|a| a.word.as_deref())
    };
    (find(ActCategory::Color), find(ActCategory::Shape))
}

/// Fallback wording for one act; `{color}`/`{shape}` slots as in templates.
pub fn default_template(act: &DialogueAct) -> String {
    let k = match act.category {
        Some(ActCategory::Shape) => "shape",
        Some(ActCategory::Both) => "object",
        _ => "color",
    };
    match act.act_type {
        DialogueActType::Inform => match act.category {
            Some(ActCategory::Shape) => "it's a {shape}".into(),
            _ => "it's {color}".into(),
        },
        DialogueActType::Acknowledgment => "yes".into(),
        DialogueActType::Rejection => "no".into(),
        DialogueActType::Asking => format!("what {k} is this?"),
        DialogueActType::Focus => format!("now the {k}"),
        DialogueActType::Clarification => format!("this is for {k}"),
        DialogueActType::Checking => "got it?".into(),
        DialogueActType::Repetition => "can you repeat that?".into(),
        DialogueActType::OfferHelp => "need help?".into(),
    }
}

/// Turn an instantiated act sequence into an utterance: sample a stored
/// template in proportion to its count, or concatenate per-act defaults in act
/// order when the sequence was never seen.
pub fn realize<R: Rng + ?Sized>(acts: &ActSequence, store: &TemplateStore, rng: &mut R) -> Result<String, SimError> {
    if acts.is_empty() {
        return Err(SimError::EmptyActs);
    }
    let template = match store.templates(acts) {
        Some(ts) if !ts.is_empty() => {
            let total: u64 = ts.values().sum();
            let mut r = rng.gen_range(0..total);
            let mut chosen = ts.keys().next().expect("non-empty");
            for (t, c) in ts {
                if r < *c {
                    chosen = t;
                    break;
                }
                r -= c;
            }
            chosen.clone()
        }
        _ => join_phrases(&acts.iter().map(default_template).collect::<Vec<_>>()),
    };
    let (c, s) = slot_words(acts);
    fill_slots(&template, c, s).ok_or_else(|| SimError::UnfillableSlot(format!("{template} for {acts}")))
}
