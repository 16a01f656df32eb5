use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::eval::Distribution;
use crate::model::{hamming, ActSequence, AttributeLexicon, ConditionVector, Corpus, Dialogue, Role};

use super::table::{CountTable, ItemCounts, NGramKey};
use super::templates::TemplateStore;
use super::text::{delexicalize_text, delexicalized_tokens, END, START};
use super::SimError;

pub const DEFAULT_N: usize = 3;
const FORMAT: &str = "wordtutor-sim";
const VERSION: u32 = 1;

/// What the simulation predicts for the tutor's next move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    /// Whole delexicalized utterance.
    Utt,
    /// Delexicalized act sequence.
    Act,
    /// Next token, including the `</s>` end marker.
    Word,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::Utt, Level::Act, Level::Word];

    pub fn name(self) -> &'static str {
        match self {
            Level::Utt => "utt",
            Level::Act => "act",
            Level::Word => "word",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Level {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Level::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| SimError::Format(format!("unknown level `{s}`")))
    }
}

/// Level-tagged predicted item.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PredictedItem {
    Utterance(String),
    Acts(ActSequence),
    Token(String),
}

/// One training or evaluation event: a tutor item with the preceding word
/// context (already padded to `n - 1` tokens) and the conditions in force.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Observation {
    pub context: Vec<String>,
    pub conditions: ConditionVector,
    pub item: String,
}

impl Observation {
    pub fn key(&self) -> NGramKey {
        NGramKey::new(self.context.clone(), self.conditions)
    }
}

/// Which stage of the back-off chain produced a prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    /// Exact (words, conditions) hit at this order (≥ 2).
    Exact { order: usize },
    /// Word context matched at this order; conditions by nearest Hamming
    /// distance with ties merged.
    Nearest { order: usize, distance: usize },
    /// No word context matched; condition-only table, nearest conditions.
    ConditionOnly { distance: usize },
    /// Global item distribution.
    Global,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub distribution: Distribution,
    pub source: Source,
}

/// Conditions in force at each turn: the stored annotation, or a replay of
/// the condition state machine over the turns' acts.
pub fn turn_conditions(dialogue: &Dialogue, lexicon: &AttributeLexicon) -> Option<Vec<ConditionVector>> {
    if dialogue.turns.iter().all(|t| t.conditions.is_some()) {
        return Some(dialogue.turns.iter().filter_map(|t| t.conditions).collect());
    }
    let object = dialogue.object.as_ref()?;
    let mut cur = ConditionVector::default();
    let mut out = Vec::with_capacity(dialogue.turns.len());
    for t in &dialogue.turns {
        if t.acts.is_empty() {
            return None;
        }
        out.push(cur);
        cur = match t.speaker {
            Role::Learner => cur.after_learner(&t.acts, object, lexicon),
            Role::Tutor => cur.after_tutor(&t.acts),
        };
    }
    Some(out)
}

fn padded(context: &[String], n: usize) -> Vec<String> {
    let want = n - 1;
    let mut out = Vec::with_capacity(want);
    if context.len() < want {
        out.extend(std::iter::repeat_n(START.to_string(), want - context.len()));
        out.extend_from_slice(context);
    } else {
        out.extend_from_slice(&context[context.len() - want..]);
    }
    out
}

/// Extract tutor observations at `level` from an annotated corpus.
pub fn observations(
    corpus: &Corpus,
    level: Level,
    n: usize,
    lexicon: &AttributeLexicon,
) -> Result<Vec<Observation>, SimError> {
    if n == 0 {
        return Err(SimError::InvalidOrder);
    }
    let mut out = Vec::new();
    for d in &corpus.dialogues {
        let conds = turn_conditions(d, lexicon).ok_or_else(|| SimError::Unannotated(d.id.clone()))?;
        for (i, t) in d.turns.iter().enumerate() {
            if t.speaker != Role::Tutor {
                continue;
            }
            let prev = if i > 0 {
                delexicalized_tokens(&d.turns[i - 1].text, lexicon)
            } else {
                Vec::new()
            };
            let conditions = conds[i];
            match level {
                Level::Act => {
                    if t.acts.is_empty() {
                        return Err(SimError::Unannotated(format!("{} turn {}", d.id, t.id)));
                    }
                    let item = t.acts.delexicalized().to_string();
                    out.push(Observation {
                        context: padded(&prev, n),
                        conditions,
                        item,
                    });
                }
                Level::Utt => {
                    let item = delexicalize_text(&t.text, lexicon);
                    out.push(Observation {
                        context: padded(&prev, n),
                        conditions,
                        item,
                    });
                }
                Level::Word => {
                    let mut ctx = prev;
                    let toks = delexicalized_tokens(&t.text, lexicon);
                    for tok in toks.into_iter().chain([END.to_string()]) {
                        out.push(Observation {
                            context: padded(&ctx, n),
                            conditions,
                            item: tok.clone(),
                        });
                        ctx.push(tok);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Compound n-gram tutor simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct SimModel {
    level: Level,
    n: usize,
    table: CountTable,
    templates: TemplateStore,
    vocabulary: BTreeSet<String>,
    global: ItemCounts,
    lexicon: AttributeLexicon,
}

impl SimModel {
    /// Count every tutor observation at all orders `1..=n` and harvest
    /// utterance templates.
    pub fn train(corpus: &Corpus, level: Level, n: usize, lexicon: &AttributeLexicon) -> Result<Self, SimError> {
        let obs = observations(corpus, level, n, lexicon)?;
        if obs.is_empty() {
            return Err(SimError::EmptyCorpus);
        }
        let mut table = CountTable::new(n);
        let mut global = ItemCounts::new();
        let mut vocabulary = BTreeSet::new();
        for o in &obs {
            table.add(&o.context, o.conditions, &o.item, 1);
            *global.entry(o.item.clone()).or_insert(0) += 1;
            if level == Level::Word {
                vocabulary.insert(o.item.clone());
            }
            vocabulary.extend(o.context.iter().filter(|w| *w != START).cloned());
        }
        let mut templates = TemplateStore::default();
        for t in corpus
            .turns()
            .filter(|t| t.speaker == Role::Tutor && !t.acts.is_empty())
        {
            templates.add_if_fillable(&t.acts, &delexicalize_text(&t.text, lexicon));
        }
        Ok(Self {
            level,
            n,
            table,
            templates,
            vocabulary,
            global,
            lexicon: lexicon.clone(),
        })
    }

    pub fn level(&self) -> Level {
        self.level
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn table(&self) -> &CountTable {
        &self.table
    }

    pub fn templates(&self) -> &TemplateStore {
        &self.templates
    }

    pub fn vocabulary(&self) -> &BTreeSet<String> {
        &self.vocabulary
    }

    pub fn lexicon(&self) -> &AttributeLexicon {
        &self.lexicon
    }

    pub fn global(&self) -> Distribution {
        Distribution::from_counts(&self.global)
    }

    /// Raw MLE `P(t | conditions)` from the condition-only table.
    pub fn conditional(&self, conditions: &ConditionVector) -> Option<Distribution> {
        self.table
            .get(&NGramKey::new(Vec::new(), *conditions))
            .map(Distribution::from_counts)
    }

    /// Tokens the model uses as word context for an utterance.
    pub fn context_tokens(&self, text: &str) -> Vec<String> {
        delexicalized_tokens(text, &self.lexicon)
    }

    fn nearest(&self, order: usize, words: &[String], conditions: &ConditionVector) -> Option<(ItemCounts, usize)> {
        let candidates = self.table.conditions_for(order, words);
        let best = candidates.iter().map(|c| hamming(c, conditions)).min()?;
        let mut merged = ItemCounts::new();
        for c in candidates.iter().filter(|c| hamming(c, conditions) == best) {
            let key = NGramKey::new(words.to_vec(), *c);
            for (item, n) in self.table.get(&key).expect("indexed key exists") {
                *merged.entry(item.clone()).or_insert(0) += n;
            }
        }
        Some((merged, best))
    }

    /// Distribution over the next item given recent context tokens (any
    /// length; padded or truncated to `n - 1`) and conditions.
    ///
    /// Exact keys are tried from order `n` down to 2; then the highest order
    /// whose word context was seen at all, with the nearest stored
    /// conditions; then the condition-only table (nearest conditions); then
    /// the global distribution.
    pub fn predict(&self, context: &[String], conditions: &ConditionVector) -> Prediction {
        let ctx = padded(context, self.n);
        for order in (2..=self.n).rev() {
            let key = NGramKey::new(ctx[ctx.len() - (order - 1)..].to_vec(), *conditions);
            if let Some(counts) = self.table.get(&key) {
                return Prediction {
                    distribution: Distribution::from_counts(counts),
                    source: Source::Exact { order },
                };
            }
        }
        for order in (2..=self.n).rev() {
            let words = &ctx[ctx.len() - (order - 1)..];
            if let Some((counts, distance)) = self.nearest(order, words, conditions) {
                return Prediction {
                    distribution: Distribution::from_counts(&counts),
                    source: Source::Nearest { order, distance },
                };
            }
        }
        if let Some((counts, distance)) = self.nearest(1, &[], conditions) {
            return Prediction {
                distribution: Distribution::from_counts(&counts),
                source: Source::ConditionOnly { distance },
            };
        }
        Prediction {
            distribution: self.global(),
            source: Source::Global,
        }
    }

    /// Draw the next item from [`SimModel::predict`].
    pub fn sample<R: Rng + ?Sized>(&self, context: &[String], conditions: &ConditionVector, rng: &mut R) -> String {
        let p = self.predict(context, conditions);
        p.distribution
            .pick(rng.gen::<f64>())
            .expect("non-empty distribution")
            .to_string()
    }

    /// Interpret a raw item string at this model's level.
    pub fn item(&self, raw: &str) -> Result<PredictedItem, SimError> {
        Ok(match self.level {
            Level::Utt => PredictedItem::Utterance(raw.to_string()),
            Level::Act => {
                PredictedItem::Acts(ActSequence::parse_abstract(raw).map_err(|e| SimError::Format(e.to_string()))?)
            }
            Level::Word => PredictedItem::Token(raw.to_string()),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ModelFile::from(self)).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, SimError> {
        let f: ModelFile = serde_json::from_str(s).map_err(|e| SimError::Format(e.to_string()))?;
        f.try_into()
    }
}

#[derive(Serialize, Deserialize)]
struct TableEntry {
    words: Vec<String>,
    conditions: ConditionVector,
    counts: ItemCounts,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    level: Level,
    n: usize,
    lexicon: AttributeLexicon,
    /// orders 1..=n
    tables: Vec<Vec<TableEntry>>,
    templates: TemplateStore,
    vocabulary: BTreeSet<String>,
    global: ItemCounts,
}

impl From<&SimModel> for ModelFile {
    fn from(m: &SimModel) -> Self {
        let tables = (1..=m.n)
            .map(|k| {
                m.table
                    .entries(k)
                    .map(|(key, counts)| TableEntry {
                        words: key.words.clone(),
                        conditions: key.conditions,
                        counts: counts.clone(),
                    })
                    .collect()
            })
            .collect();
        Self {
            format: FORMAT.into(),
            version: VERSION,
            level: m.level,
            n: m.n,
            lexicon: m.lexicon.clone(),
            tables,
            templates: m.templates.clone(),
            vocabulary: m.vocabulary.clone(),
            global: m.global.clone(),
        }
    }
}

impl TryFrom<ModelFile> for SimModel {
    type Error = SimError;

    fn try_from(f: ModelFile) -> Result<Self, SimError> {
        if f.format != FORMAT || f.version != VERSION {
            return Err(SimError::Format(format!(
                "unsupported model file {} v{}",
                f.format, f.version
            )));
        }
        if f.n == 0 || f.tables.len() != f.n {
            return Err(SimError::Format(format!(
                "expected {} count tables, found {}",
                f.n,
                f.tables.len()
            )));
        }
        if f.global.is_empty() {
            return Err(SimError::EmptyCorpus);
        }
        f.lexicon
            .validate()
            .map_err(|e| SimError::Format(format!("lexicon: {e:?}")))?;
        f.templates.validate()?;
        let mut table = CountTable::new(f.n);
        for (k, entries) in f.tables.into_iter().enumerate() {
            for e in entries {
                if e.words.len() != k {
                    return Err(SimError::Format(format!(
                        "order {} key with {} words",
                        k + 1,
                        e.words.len()
                    )));
                }
                let mut ctx = vec![START.to_string(); f.n - 1 - k];
                ctx.extend(e.words);
                for (item, c) in e.counts {
                    if c == 0 {
                        return Err(SimError::Format("zero count in table".into()));
                    }
                    table.add_at(k + 1, &ctx, e.conditions, &item, c);
                }
            }
        }
        Ok(Self {
            level: f.level,
            n: f.n,
            table,
            templates: f.templates,
            vocabulary: f.vocabulary,
            global: f.global,
            lexicon: f.lexicon,
        })
    }
}

impl SimModel {
    /// Raw counts under an exact key, if stored.
    pub fn counts(&self, key: &NGramKey) -> Option<&BTreeMap<String, u64>> {
        self.table.get(key)
    }
}
