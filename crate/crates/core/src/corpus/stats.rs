use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::model::{Corpus, DialogueActType, PhenomenonTag, Role};

use super::phenomena::detect_overlaps;

/// Descriptive statistics of a corpus.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub dialogue_count: usize,
    pub turn_count: usize,
    /// dialogue length (turns) -> number of dialogues
    pub turns_per_dialogue: BTreeMap<usize, usize>,
    pub mean_turns_per_dialogue: f64,
    /// acts per annotated turn -> number of turns, per speaker
    pub acts_per_turn: BTreeMap<Role, BTreeMap<usize, usize>>,
    /// share of a speaker's annotated turns carrying more than one act
    pub multi_act_share: BTreeMap<Role, f64>,
    pub act_frequency: BTreeMap<Role, BTreeMap<DialogueActType, usize>>,
    pub phenomenon_frequency: BTreeMap<PhenomenonTag, usize>,
    pub overlap_count: usize,
    pub overlaps_per_dialogue: f64,
}

impl CorpusStats {
    /// Mean dialogue length rounded to two decimals, e.g. `13.86`.
    pub fn mean_display(&self) -> String {
        format!("{:.2}", self.mean_turns_per_dialogue)
    }

    /// Normalized act-type distribution of one speaker.
    pub fn act_distribution(&self, role: Role) -> BTreeMap<DialogueActType, f64> {
        let Some(freq) = self.act_frequency.get(&role) else {
            return BTreeMap::new();
        };
        let total: usize = freq.values().sum();
        freq.iter()
            .map(|(k, v)| (*k, *v as f64 / total.max(1) as f64))
            .collect()
    }

    /// Flat `section,key,value` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("section,key,value\n");
        let _ = writeln!(s, "summary,dialogues,{}", self.dialogue_count);
        let _ = writeln!(s, "summary,turns,{}", self.turn_count);
        let _ = writeln!(s, "summary,mean_turns_per_dialogue,{}", self.mean_display());
        let _ = writeln!(s, "summary,overlaps,{}", self.overlap_count);
        let _ = writeln!(s, "summary,overlaps_per_dialogue,{:.2}", self.overlaps_per_dialogue);
        for (len, n) in &self.turns_per_dialogue {
            let _ = writeln!(s, "turns_per_dialogue,{len},{n}");
        }
        for (role, hist) in &self.acts_per_turn {
            for (k, n) in hist {
                let _ = writeln!(s, "acts_per_turn_{},{k},{n}", role.name());
            }
        }
        for (role, share) in &self.multi_act_share {
            let _ = writeln!(s, "multi_act_share,{},{:.4}", role.name(), share);
        }
        for (role, freq) in &self.act_frequency {
            for (t, n) in freq {
                let _ = writeln!(s, "act_frequency_{},{},{n}", role.name(), t.canonical());
            }
        }
        for (p, n) in &self.phenomenon_frequency {
            let _ = writeln!(s, "phenomena,{},{n}", p.name());
        }
        s
    }
}

/// Exact counts over a corpus. Act statistics only cover turns that carry
/// annotations.
pub fn compute_stats(corpus: &Corpus) -> CorpusStats {
    let mut st = CorpusStats {
        dialogue_count: corpus.dialogues.len(),
        turn_count: corpus.turn_count(),
        ..Default::default()
    };
    for d in &corpus.dialogues {
        *st.turns_per_dialogue.entry(d.turns.len()).or_insert(0) += 1;
        st.overlap_count += detect_overlaps(d).len();
        for t in &d.turns {
            for p in &t.phenomena {
                *st.phenomenon_frequency.entry(*p).or_insert(0) += 1;
            }
            if t.acts.is_empty() {
                continue;
            }
            *st.acts_per_turn
                .entry(t.speaker)
                .or_default()
                .entry(t.acts.len())
                .or_insert(0) += 1;
            let freq = st.act_frequency.entry(t.speaker).or_default();
            for a in t.acts.iter() {
                *freq.entry(a.act_type).or_insert(0) += 1;
            }
        }
    }
    for (role, hist) in &st.acts_per_turn {
        let total: usize = hist.values().sum();
        let multi: usize = hist.iter().filter(|(k, _)| **k > 1).map(|(_, v)| v).sum();
        st.multi_act_share.insert(*role, multi as f64 / total as f64);
    }
    if st.dialogue_count > 0 {
        st.mean_turns_per_dialogue = st.turn_count as f64 / st.dialogue_count as f64;
        st.overlaps_per_dialogue = st.overlap_count as f64 / st.dialogue_count as f64;
    }
    st
}
