//! Corpus cleaning: spelling substitutions, emoticon removal and exclusion of
//! off-task spans. Every change is reported.

use std::collections::BTreeMap;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::model::Corpus;

use super::CorpusError;

pub const DEFAULT_EMOTICONS: &[&str] = &[":)", ":(", ":D", ";)", ":P"];

fn default_emoticons() -> Vec<String> {
    DEFAULT_EMOTICONS.iter().map(|s| s.to_string()).collect()
}

/// Inclusive range of turn ids to drop from one dialogue.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExcludedSpan {
    pub dialogue: String,
    pub from: u32,
    pub to: u32,
}

/// Cleaning configuration. `CleaningRules::default()` is the empty rule set;
/// a rules file without an `emoticons` key gets [`DEFAULT_EMOTICONS`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleaningRules {
    #[serde(default)]
    pub substitutions: BTreeMap<String, String>,
    #[serde(default = "default_emoticons")]
    pub emoticons: Vec<String>,
    /// Extra emoticon patterns as regular expressions.
    #[serde(default)]
    pub emoticon_patterns: Vec<String>,
    #[serde(default)]
    pub exclude: Vec<ExcludedSpan>,
}

impl CleaningRules {
    pub fn with_default_emoticons() -> Self {
        Self {
            emoticons: default_emoticons(),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChangeKind {
    Substitution { from: String, to: String },
    Emoticon { text: String },
    Excluded,
    Emptied,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Change {
    pub dialogue: String,
    pub turn: u32,
    #[serde(flatten)]
    pub kind: ChangeKind,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanReport {
    pub changes: Vec<Change>,
}

impl CleanReport {
    pub fn substitutions(&self) -> usize {
        self.changes
            .iter()
            .filter(|c| matches!(c.kind, ChangeKind::Substitution { .. }))
            .count()
    }
}

struct Compiled {
    /// Substitution keys, longest first.
    subs: Vec<(String, String)>,
    emoticons: Vec<Regex>,
}

const MAX_PASSES: usize = 16;

fn compile(rules: &CleaningRules) -> Result<Compiled, CorpusError> {
    let mut subs: Vec<(String, String)> = rules
        .substitutions
        .iter()
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    if subs.iter().any(|(k, _)| k.trim().is_empty()) {
        return Err(CorpusError::Rules("empty substitution key".into()));
    }
    subs.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
    let mut emoticons = Vec::new();
    for e in &rules.emoticons {
        if e.is_empty() {
            return Err(CorpusError::Rules("empty emoticon".into()));
        }
        emoticons.push(Regex::new(&regex::escape(e)).expect("escaped literal"));
    }
    for p in &rules.emoticon_patterns {
        let re = Regex::new(p).map_err(|e| CorpusError::Rules(format!("pattern `{p}`: {e}")))?;
        if re.is_match("") {
            return Err(CorpusError::Rules(format!("pattern `{p}` matches the empty string")));
        }
        emoticons.push(re);
    }
    let mut spans: Vec<&ExcludedSpan> = rules.exclude.iter().collect();
    spans.sort_by(|a, b| (&a.dialogue, a.from).cmp(&(&b.dialogue, b.from)));
    for s in &spans {
        if s.from > s.to {
            return Err(CorpusError::Rules(format!(
                "span {}..{} in `{}` is reversed",
                s.from, s.to, s.dialogue
            )));
        }
    }
    for w in spans.windows(2) {
        if w[0].dialogue == w[1].dialogue && w[1].from <= w[0].to {
            return Err(CorpusError::OverlappingSpans(w[0].dialogue.clone()));
        }
    }
    Ok(Compiled { subs, emoticons })
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '\''
}

/// One left-to-right pass of longest-match-first replacement at word
/// boundaries.
fn substitute(text: &str, subs: &[(String, String)], log: &mut Vec<(String, String)>) -> String {
    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    let mut prev: Option<char> = None;
    'outer: while i < text.len() {
        if !prev.is_some_and(is_word_char) {
            for (k, v) in subs {
                if text[i..].starts_with(k.as_str()) && !text[i + k.len()..].chars().next().is_some_and(is_word_char) {
                    out.push_str(v);
                    log.push((k.clone(), v.clone()));
                    i += k.len();
                    prev = k.chars().last();
                    continue 'outer;
                }
            }
        }
        let c = text[i..].chars().next().expect("in bounds");
        out.push(c);
        prev = Some(c);
        i += c.len_utf8();
    }
    out
}

fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Apply cleaning rules to a corpus. Timestamps and event references are
/// never modified; turns that end up empty are dropped and reported.
pub fn clean(corpus: &Corpus, rules: &CleaningRules) -> Result<(Corpus, CleanReport), CorpusError> {
    let compiled = compile(rules)?;
    let mut report = CleanReport::default();
    let mut out = corpus.clone();
    for d in out.dialogues.iter_mut() {
        let spans: Vec<&ExcludedSpan> = rules.exclude.iter().filter(|s| s.dialogue == d.id).collect();
        let mut kept = Vec::with_capacity(d.turns.len());
        for mut t in std::mem::take(&mut d.turns) {
            if spans.iter().any(|s| (s.from..=s.to).contains(&t.id)) {
                report.changes.push(Change {
                    dialogue: d.id.clone(),
                    turn: t.id,
                    kind: ChangeKind::Excluded,
                });
                continue;
            }
            let mut text = t.text.clone();
            let mut converged = false;
            for _ in 0..MAX_PASSES {
                let before = text.clone();
                let mut removed = false;
                for re in &compiled.emoticons {
                    while let Some(m) = re.find(&text) {
                        report.changes.push(Change {
                            dialogue: d.id.clone(),
                            turn: t.id,
                            kind: ChangeKind::Emoticon {
                                text: m.as_str().to_string(),
                            },
                        });
                        text.replace_range(m.range(), " ");
                        removed = true;
                    }
                }
                if removed {
                    text = collapse_whitespace(&text);
                }
                let mut log = Vec::new();
                text = substitute(&text, &compiled.subs, &mut log);
                for (from, to) in log {
                    report.changes.push(Change {
                        dialogue: d.id.clone(),
                        turn: t.id,
                        kind: ChangeKind::Substitution { from, to },
                    });
                }
                if text == before {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(CorpusError::Rules(format!(
                    "substitutions do not converge on turn {} of `{}`",
                    t.id, d.id
                )));
            }
            if text.trim().is_empty() {
                report.changes.push(Change {
                    dialogue: d.id.clone(),
                    turn: t.id,
                    kind: ChangeKind::Emptied,
                });
                continue;
            }
            t.text = text;
            kept.push(t);
        }
        d.turns = kept;
    }
    Ok((out, report))
}
