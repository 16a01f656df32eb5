use std::collections::BTreeMap;

use serde::Serialize;

use crate::model::{AttributeLexicon, Corpus};
use crate::sim::{observations, ItemCounts, Level, NGramKey, SimModel};

use super::{kld, Distribution, EvalError, DEFAULT_EPSILON};

/// Outcome for one distinct evaluation key.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KeyResult {
    pub key: NGramKey,
    pub empirical: Distribution,
    pub predicted: Distribution,
    pub argmax: String,
    pub correct: bool,
    pub kld: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ConditionBreakdown {
    pub keys: usize,
    pub correct: usize,
    pub accuracy: f64,
    pub mean_kld: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub level: Level,
    pub keys: usize,
    pub correct: usize,
    pub accuracy: f64,
    /// Average of the per-key divergences, in nats.
    pub mean_kld: f64,
    /// keyed by the condition vector's `a,b,c` form
    pub per_condition: BTreeMap<String, ConditionBreakdown>,
    #[serde(skip)]
    pub results: Vec<KeyResult>,
}

impl EvalReport {
    /// One row per key.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("key,conditions,empirical,predicted,argmax,correct,kld\n");
        for r in &self.results {
            out.push_str(&format!(
                "{},{},{},{},{},{},{:.12}\n",
                csv_field(&r.key.words.join(" ")),
                csv_field(&r.key.conditions.to_string()),
                csv_field(&r.empirical.compact()),
                csv_field(&r.predicted.compact()),
                csv_field(&r.argmax),
                r.correct,
                r.kld
            ));
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Accuracy, mean KLD and per-key detail of `model` on `corpus`.
///
/// Keys are the distinct full-order `(context, conditions)` pairs of the
/// corpus. A key is correct when the model's most probable item (ties by
/// canonical order) occurs in the corpus under that key.
pub fn evaluate(
    model: &SimModel,
    corpus: &Corpus,
    level: Level,
    lexicon: &AttributeLexicon,
) -> Result<EvalReport, EvalError> {
    if level != model.level() {
        return Err(EvalError::LevelMismatch {
            model: model.level(),
            requested: level,
        });
    }
    let obs = observations(corpus, level, model.n(), lexicon)?;
    if obs.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    let mut by_key: BTreeMap<NGramKey, ItemCounts> = BTreeMap::new();
    for o in obs {
        *by_key.entry(o.key()).or_default().entry(o.item).or_insert(0) += 1;
    }
    let mut results = Vec::with_capacity(by_key.len());
    for (key, counts) in by_key {
        let empirical = Distribution::from_counts(&counts);
        let predicted = model.predict(&key.words, &key.conditions).distribution;
        let argmax = predicted.argmax().expect("non-empty prediction").to_string();
        let correct = counts.contains_key(&argmax);
        let kld = kld(&empirical, &predicted, DEFAULT_EPSILON)?;
        results.push(KeyResult {
            key,
            empirical,
            predicted,
            argmax,
            correct,
            kld,
        });
    }
    let mut per_condition: BTreeMap<String, ConditionBreakdown> = BTreeMap::new();
    for r in &results {
        let b = per_condition.entry(r.key.conditions.to_string()).or_default();
        b.keys += 1;
        b.correct += r.correct as usize;
        b.mean_kld += r.kld;
    }
    for b in per_condition.values_mut() {
        b.accuracy = b.correct as f64 / b.keys as f64;
        b.mean_kld /= b.keys as f64;
    }
    let keys = results.len();
    let correct = results.iter().filter(|r| r.correct).count();
    Ok(EvalReport {
        level,
        keys,
        correct,
        accuracy: correct as f64 / keys as f64,
        mean_kld: results.iter().map(|r| r.kld).sum::<f64>() / keys as f64,
        per_condition,
        results,
    })
}

/// Just the accuracy part of [`evaluate`] at the model's own level.
pub fn accuracy(model: &SimModel, corpus: &Corpus, lexicon: &AttributeLexicon) -> Result<f64, EvalError> {
    Ok(evaluate(model, corpus, model.level(), lexicon)?.accuracy)
}
