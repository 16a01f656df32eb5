//! Synthetic two-party tutoring corpus with keystroke timing and gold
//! annotations.
//!
//! Each session walks a learner through a shuffled pass over the object grid.
//! The learner remembers words across the objects of a session; the tutor
//! answers from a configurable conditional act policy
//! `P(acts | conditions)`. Turns are typed out character by character with a
//! configurable cadence, and a response may start before the previous turn
//! has finished (overlap).

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{
    make_object_sequence, ActSequence, AttributeLexicon, Category, CharEvent, ConditionVector, Context, Corpus,
    Dialogue, DialogueActType, Knowledge, Outcome, Role, Turn, VisualObject,
};

use super::phenomena::detect_overlaps;
use super::phrases::{join_phrases, tutor_phrase, LearnerIntent};
use super::segment::dialogue_id;
use super::CorpusError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cadence {
    pub min_gap_ms: u64,
    pub max_gap_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pause {
    pub min_ms: u64,
    pub max_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnerParams {
    /// Probability of naming a wrong word when the right one is remembered.
    pub error_rate: f64,
    /// Probability of trying a remembered word of another label instead of
    /// asking when the right word is unknown.
    pub guess_rate: f64,
    /// Probability of a plain acknowledgment after a tutor inform/check.
    pub ack_rate: f64,
    pub filler_rate: f64,
    pub repetition_rate: f64,
}

impl Default for LearnerParams {
    fn default() -> Self {
        Self {
            error_rate: 0.15,
            guess_rate: 0.3,
            ack_rate: 0.2,
            filler_rate: 0.08,
            repetition_rate: 0.05,
        }
    }
}

/// Distribution over delexicalized act sequences for one condition value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyRow {
    pub conditions: ConditionVector,
    /// canonical abstract act sequence -> probability
    pub outcomes: BTreeMap<String, f64>,
}

/// Conditional tutor act policy. Rows must cover every condition value the
/// dialogue can reach; the default covers all 36.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TutorPolicy {
    pub rows: Vec<PolicyRow>,
}

impl Default for TutorPolicy {
    fn default() -> Self {
        default_tutor_policy()
    }
}

/// The stock policy: correct wrong guesses, inform unknown attributes,
/// acknowledge correct ones and move on.
pub fn default_tutor_policy() -> TutorPolicy {
    use Knowledge::*;
    let rows = ConditionVector::all()
        .into_iter()
        .map(|cond| {
            let f = cond.focus();
            let o = f.other();
            let (fk, ok) = (f.name(), o.name());
            let entries: Vec<(String, f64)> = match (cond.state(f), cond.state(o), cond.pre_context) {
                (Known, Known, _) => vec![("ack()".into(), 0.7), ("ack()+check()".into(), 0.3)],
                (Guessed, _, _) => vec![
                    (format!("reject({fk})+inform({fk})"), 0.6),
                    (format!("inform({fk})"), 0.25),
                    (format!("reject({fk})"), 0.15),
                ],
                (Unknown, Unknown, Context::None) => {
                    vec![("ask(both)".into(), 0.5), ("inform(color)+inform(shape)".into(), 0.5)]
                }
                (Unknown, _, _) => vec![
                    (format!("inform({fk})"), 0.7),
                    (format!("inform({fk})+check()"), 0.2),
                    ("offer_help()".into(), 0.1),
                ],
                (Known, _, _) => vec![
                    (format!("ack()+focus({ok})"), 0.5),
                    (format!("ack()+ask({ok})"), 0.3),
                    ("ack()".into(), 0.2),
                ],
            };
            PolicyRow {
                conditions: cond,
                outcomes: entries.into_iter().collect(),
            }
        })
        .collect();
    TutorPolicy { rows }
}

/// Parsed, sampling-ready form of a [`TutorPolicy`].
#[derive(Debug, Clone)]
pub struct CompiledPolicy {
    rows: BTreeMap<ConditionVector, Vec<(ActSequence, f64)>>,
}

impl CompiledPolicy {
    pub fn new(policy: &TutorPolicy) -> Result<Self, CorpusError> {
        let mut rows = BTreeMap::new();
        for row in &policy.rows {
            let mut outs = Vec::new();
            let mut total = 0.0;
            for (s, p) in &row.outcomes {
                let acts = ActSequence::parse_abstract(s)
                    .map_err(|e| CorpusError::InvalidParams(format!("policy act `{s}`: {e}")))?;
                if acts.is_empty() || p.is_nan() || *p < 0.0 {
                    return Err(CorpusError::InvalidParams(format!("bad policy outcome `{s}`={p}")));
                }
                total += p;
                outs.push((acts, *p));
            }
            if (total - 1.0).abs() > 1e-9 {
                return Err(CorpusError::InvalidParams(format!(
                    "policy row {} sums to {total}",
                    row.conditions
                )));
            }
            if rows.insert(row.conditions, outs).is_some() {
                return Err(CorpusError::InvalidParams(format!(
                    "duplicate policy row {}",
                    row.conditions
                )));
            }
        }
        Ok(Self { rows })
    }

    pub fn distribution(&self, cond: &ConditionVector) -> Option<&[(ActSequence, f64)]> {
        self.rows.get(cond).map(Vec::as_slice)
    }

    fn sample<R: Rng + ?Sized>(&self, cond: &ConditionVector, rng: &mut R) -> Result<&ActSequence, CorpusError> {
        let dist = self
            .distribution(cond)
            .ok_or_else(|| CorpusError::InvalidParams(format!("policy has no row for {cond}")))?;
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (acts, p) in dist {
            acc += p;
            if u < acc {
                return Ok(acts);
            }
        }
        Ok(&dist.last().expect("non-empty row").0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthParams {
    pub dialogues: usize,
    pub objects_per_session: usize,
    pub cadence: Cadence,
    pub pause: Pause,
    pub overlap_prob: f64,
    pub max_turns: usize,
    pub learner: LearnerParams,
    pub tutor_policy: TutorPolicy,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            dialogues: 90,
            objects_per_session: 9,
            cadence: Cadence {
                min_gap_ms: 60,
                max_gap_ms: 450,
            },
            pause: Pause {
                min_ms: 1500,
                max_ms: 4000,
            },
            overlap_prob: 0.2,
            max_turns: 30,
            learner: LearnerParams::default(),
            tutor_policy: default_tutor_policy(),
            seed: 1,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<(), CorpusError> {
        let bad = |m: &str| Err(CorpusError::InvalidParams(m.to_string()));
        if self.dialogues == 0 || self.objects_per_session == 0 {
            return bad("dialogue and object counts must be positive");
        }
        if self.cadence.min_gap_ms == 0 || self.cadence.min_gap_ms > self.cadence.max_gap_ms {
            return bad("cadence range must satisfy 0 < min <= max");
        }
        if self.pause.min_ms > self.pause.max_ms {
            return bad("pause range must satisfy min <= max");
        }
        if !(0.0..=1.0).contains(&self.overlap_prob) {
            return bad("overlap_prob must lie in [0, 1]");
        }
        if self.max_turns < 2 {
            return bad("max_turns must be at least 2");
        }
        let l = &self.learner;
        for p in [l.error_rate, l.guess_rate, l.ack_rate, l.filler_rate, l.repetition_rate] {
            if !(0.0..=1.0).contains(&p) {
                return bad("learner probabilities must lie in [0, 1]");
            }
        }
        Ok(())
    }
}

/// Generator output: the raw log plus everything needed to check downstream
/// stages against ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthOutput {
    pub events: Vec<CharEvent>,
    pub corpus: Corpus,
    /// dialogue id -> overlapping turn-id pairs
    pub overlaps: BTreeMap<String, BTreeSet<(u32, u32)>>,
    /// Expected tutor act-type counts: the policy distributions summed over
    /// the tutor turns actually generated.
    pub expected_tutor_acts: BTreeMap<DialogueActType, f64>,
}

impl SynthOutput {
    /// Fraction of consecutive turn pairs that overlap.
    pub fn realized_overlap_rate(&self) -> f64 {
        let pairs: usize = self
            .corpus
            .dialogues
            .iter()
            .map(|d| d.turns.len().saturating_sub(1))
            .sum();
        let adjacent: usize = self
            .overlaps
            .values()
            .map(|s| s.iter().filter(|(a, b)| b - a == 1).count())
            .sum();
        adjacent as f64 / pairs.max(1) as f64
    }
}

/// Learner word memory: per category, label -> remembered word.
#[derive(Default)]
struct Memory {
    words: [[Option<String>; 3]; 2],
}

impl Memory {
    fn get(&self, k: Category, label: usize) -> Option<&String> {
        self.words[k as usize][label].as_ref()
    }

    fn set(&mut self, k: Category, label: usize, w: &str) {
        self.words[k as usize][label] = Some(w.to_string());
    }

    fn forget(&mut self, k: Category, label: usize, w: &str) {
        if self.get(k, label).is_some_and(|m| m == w) {
            self.words[k as usize][label] = None;
        }
    }

    fn known(&self, k: Category) -> Vec<&String> {
        self.words[k as usize].iter().flatten().collect()
    }
}

struct PlannedTurn {
    speaker: Role,
    text: String,
    acts: ActSequence,
    conditions: ConditionVector,
}

fn decorate<R: Rng + ?Sized>(text: String, params: &LearnerParams, rng: &mut R) -> String {
    let mut t = text;
    if rng.gen_bool(params.repetition_rate) {
        if let Some(first) = t.split_whitespace().next().map(str::to_string) {
            t = format!("{first} {t}");
        }
    }
    if rng.gen_bool(params.filler_rate) {
        t = format!("{} {t}", ["um...", "err", "uhh"].choose(rng).expect("non-empty"));
    }
    t
}

fn learner_intent<R: Rng + ?Sized>(
    cond: &ConditionVector,
    last_tutor: Option<&ActSequence>,
    memory: &Memory,
    object: &VisualObject,
    lexicon: &AttributeLexicon,
    params: &LearnerParams,
    rng: &mut R,
) -> LearnerIntent {
    let mut k = cond.focus();
    if cond.state(k) == Knowledge::Known {
        k = k.other();
    }
    if let Some(last) = last_tutor {
        let prompted = last.contains_type(DialogueActType::Inform) || last.contains_type(DialogueActType::Checking);
        if prompted && rng.gen_bool(params.ack_rate) {
            return LearnerIntent::Ack;
        }
    }
    let label = object.label(k);
    let guess = |w: String, rng: &mut R| {
        if rng.gen_bool(0.5) {
            LearnerIntent::Polar(k, w)
        } else {
            LearnerIntent::Statement(k, w)
        }
    };
    if let Some(w) = memory.get(k, label) {
        let w = if rng.gen_bool(params.error_rate) {
            let others: Vec<&str> = lexicon.words(k).into_iter().filter(|x| *x != w).collect();
            others.choose(rng).expect("three words per category").to_string()
        } else {
            w.clone()
        };
        return guess(w, rng);
    }
    let remembered = memory.known(k);
    if !remembered.is_empty() && rng.gen_bool(params.guess_rate) {
        let w = remembered.choose(rng).expect("non-empty").to_string();
        return guess(w, rng);
    }
    if rng.gen_bool(0.8) {
        LearnerIntent::AskWh(k)
    } else {
        LearnerIntent::DontKnow(k)
    }
}

fn update_memory(memory: &mut Memory, tutor: &ActSequence, learner: &ActSequence, object: &VisualObject) {
    for a in tutor.iter() {
        if a.act_type == DialogueActType::Inform {
            if let (Some(k), Some(w)) = (a.category.and_then(|c| c.single()), &a.word) {
                memory.set(k, object.label(k), w);
            }
        }
    }
    let rejected = tutor.contains_type(DialogueActType::Rejection);
    let acked = tutor.contains_type(DialogueActType::Acknowledgment);
    for a in learner.iter() {
        if let (Some(k), Some(w)) = (a.category.and_then(|c| c.single()), &a.word) {
            if rejected {
                memory.forget(k, object.label(k), w);
            } else if acked {
                memory.set(k, object.label(k), w);
            }
        }
    }
}

fn plan_dialogue<R: Rng + ?Sized>(
    object: &VisualObject,
    lexicon: &AttributeLexicon,
    policy: &CompiledPolicy,
    params: &SynthParams,
    memory: &mut Memory,
    expected: &mut BTreeMap<DialogueActType, f64>,
    rng: &mut R,
) -> Result<(Vec<PlannedTurn>, ConditionVector), CorpusError> {
    let mut cond = ConditionVector::default();
    let mut turns = Vec::new();
    let mut last_tutor: Option<ActSequence> = None;
    while turns.len() + 2 <= params.max_turns {
        let intent = learner_intent(
            &cond,
            last_tutor.as_ref(),
            memory,
            object,
            lexicon,
            &params.learner,
            rng,
        );
        let acts = intent.acts();
        let text = decorate(intent.realize(rng), &params.learner, rng);
        turns.push(PlannedTurn {
            speaker: Role::Learner,
            text,
            acts: acts.clone(),
            conditions: cond,
        });
        cond = cond.after_learner(&acts, object, lexicon);

        let dist = policy
            .distribution(&cond)
            .ok_or_else(|| CorpusError::InvalidParams(format!("policy has no row for {cond}")))?;
        for (seq, p) in dist {
            for a in seq.iter() {
                *expected.entry(a.act_type).or_insert(0.0) += p;
            }
        }
        let tutor_acts = policy.sample(&cond, rng)?.instantiate(object, lexicon);
        let parts: Vec<String> = tutor_acts.iter().map(|a| tutor_phrase(a, rng)).collect();
        turns.push(PlannedTurn {
            speaker: Role::Tutor,
            text: join_phrases(&parts),
            acts: tutor_acts.clone(),
            conditions: cond,
        });
        cond = cond.after_tutor(&tutor_acts);
        update_memory(memory, &tutor_acts, &acts, object);
        last_tutor = Some(tutor_acts);
        if cond.both_known() {
            break;
        }
    }
    Ok((turns, cond))
}

/// Generate a synthetic corpus. Deterministic for a given `params.seed`.
pub fn generate_synthetic_corpus(lexicon: &AttributeLexicon, params: &SynthParams) -> Result<SynthOutput, CorpusError> {
    params.validate()?;
    lexicon
        .validate()
        .map_err(|e| CorpusError::InvalidParams(format!("lexicon: {e:?}")))?;
    let policy = CompiledPolicy::new(&params.tutor_policy)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut out = SynthOutput {
        events: Vec::new(),
        corpus: Corpus::default(),
        overlaps: BTreeMap::new(),
        expected_tutor_acts: BTreeMap::new(),
    };
    let per_session = params.objects_per_session;
    let sessions = params.dialogues.div_ceil(per_session);
    for s in 0..sessions {
        let session = format!("synth-{s:04}");
        let n = per_session.min(params.dialogues - s * per_session);
        let objects = make_object_sequence(lexicon, n, rng.gen())?;
        let mut memory = Memory::default();
        let mut clock = 0u64;
        // (ts, speaker, char, dialogue index, turn index)
        let mut keys: Vec<(u64, Role, char, usize, usize)> = Vec::new();
        let mut dialogues = Vec::with_capacity(n);
        for (oi, object) in objects.iter().enumerate() {
            let (planned, final_cond) = plan_dialogue(
                object,
                lexicon,
                &policy,
                params,
                &mut memory,
                &mut out.expected_tutor_acts,
                &mut rng,
            )?;
            let mut d = Dialogue::new(dialogue_id(&session, oi), Some(object.clone()));
            d.outcome = Outcome {
                color_identified: final_cond.c_state == Knowledge::Known,
                shape_identified: final_cond.s_state == Knowledge::Known,
            };
            let mut last_end: [Option<u64>; 2] = [None, None];
            let mut prev: Option<(u64, u64, Role)> = None;
            for (ti, p) in planned.into_iter().enumerate() {
                let pause = rng.gen_range(params.pause.min_ms..=params.pause.max_ms);
                let own_min = last_end[p.speaker as usize].map(|e| e + pause);
                let start = match prev {
                    None => clock + pause,
                    Some((ps, pe, pspk)) => {
                        let overlap = pspk != p.speaker && rng.gen_bool(params.overlap_prob);
                        let candidate = if overlap {
                            ps + 1 + rng.gen_range(0..=(pe - ps))
                        } else {
                            pe + pause
                        };
                        candidate.max(own_min.unwrap_or(0))
                    }
                };
                let mut ts = start;
                for (ci, ch) in p.text.chars().enumerate() {
                    if ci > 0 {
                        ts += rng.gen_range(params.cadence.min_gap_ms..=params.cadence.max_gap_ms);
                    }
                    keys.push((ts, p.speaker, ch, oi, ti));
                }
                let mut turn = Turn::new(ti as u32, p.speaker, start, ts, p.text);
                turn.acts = p.acts;
                turn.conditions = Some(p.conditions);
                d.turns.push(turn);
                last_end[p.speaker as usize] = Some(ts);
                prev = Some((start, ts, p.speaker));
            }
            clock = d.turns.iter().map(|t| t.end_ms).max().unwrap_or(clock);
            dialogues.push(d);
        }
        keys.sort_by_key(|k| (k.0, k.1));
        for (i, (ts, speaker, ch, oi, ti)) in keys.into_iter().enumerate() {
            let seq = i as u64 + 1;
            dialogues[oi].turns[ti].events.push(seq);
            out.events.push(CharEvent {
                seq,
                server_ts: ts,
                session_id: session.clone(),
                object_index: oi,
                sender: speaker,
                ch,
                client_ts: ts,
            });
        }
        for d in dialogues {
            out.overlaps.insert(d.id.clone(), detect_overlaps(&d));
            out.corpus.dialogues.push(d);
        }
    }
    Ok(out)
}
