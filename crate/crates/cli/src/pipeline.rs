//! The end-to-end experiment: data, segmentation, statistics, simulation
//! training and evaluation, policy training and evaluation.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use log::info;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use wordtutor_core::agent::{
    run_learning, train_policy, Agent, AgentState, PerfCurve, QTable, RunConfig, RunResult, TrainConfig,
};
use wordtutor_core::corpus::{compute_stats, generate_synthetic_corpus, io};
use wordtutor_core::eval::evaluate;
use wordtutor_core::model::{AttributeLexicon, Corpus};
use wordtutor_core::sim::{Level, SimModel};

use crate::config::ExperimentConfig;
use crate::{ingest, segment_log, sha256_hex, stage_seed};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub files: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn get(&self, path: &str) -> Option<&ManifestEntry> {
        self.files.iter().find(|e| e.path == path)
    }
}

struct Out {
    dir: PathBuf,
    files: Vec<ManifestEntry>,
}

impl Out {
    fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(ManifestEntry {
            path: rel.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    fn json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<()> {
        let mut v = serde_json::to_vec_pretty(value)?;
        v.push(b'\n');
        self.write(rel, &v)
    }
}

fn stage<T>(name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    info!("stage {name}");
    f().with_context(|| format!("stage `{name}` failed"))
}

/// Deterministic split of a corpus into (train, held-out) dialogues.
pub fn split_corpus(corpus: &Corpus, train_fraction: f64, seed: u64) -> (Corpus, Corpus) {
    let mut idx: Vec<usize> = (0..corpus.dialogues.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let cut =
        ((corpus.dialogues.len() as f64 * train_fraction).round() as usize).clamp(1, corpus.dialogues.len().max(1));
    let (a, b) = idx.split_at(cut.min(idx.len()));
    let pick = |ids: &[usize]| {
        let mut ids = ids.to_vec();
        ids.sort_unstable();
        Corpus::new(ids.into_iter().map(|i| corpus.dialogues[i].clone()).collect())
    };
    (pick(a), pick(b))
}

/// One fold of policy evaluation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldResult {
    pub fold: usize,
    pub seed: u64,
    pub rule_r_perf: f64,
    pub rl_r_perf: f64,
    pub rule_accuracy: f64,
    pub rl_accuracy: f64,
    pub rule_cost: f64,
    pub rl_cost: f64,
    pub rl_capped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RlSummary {
    pub folds: usize,
    pub rule_r_perf: f64,
    pub rl_r_perf: f64,
    /// Mean learned-policy ratio over mean rule ratio.
    pub r_perf_ratio: f64,
    pub rule_accuracy: f64,
    pub rl_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RlEvaluation {
    pub folds: Vec<FoldResult>,
    pub rule_curve: PerfCurve,
    pub rl_curve: PerfCurve,
    pub summary: RlSummary,
}

impl RlEvaluation {
    pub fn folds_csv(&self) -> String {
        let mut s =
            String::from("fold,seed,rule_r_perf,rl_r_perf,rule_accuracy,rl_accuracy,rule_cost,rl_cost,rl_capped\n");
        for f in &self.folds {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                f.fold,
                f.seed,
                f.rule_r_perf,
                f.rl_r_perf,
                f.rule_accuracy,
                f.rl_accuracy,
                f.rule_cost,
                f.rl_cost,
                f.rl_capped
            );
        }
        s
    }
}

/// Train one policy per fold seed, folds in parallel.
pub fn train_folds(
    tutor: &SimModel,
    lexicon: &AttributeLexicon,
    config: &TrainConfig,
    seeds: &[u64],
) -> Result<Vec<QTable<AgentState>>> {
    std::thread::scope(|s| {
        let handles: Vec<_> = seeds
            .iter()
            .map(|seed| s.spawn(move || train_policy(tutor, lexicon, config, *seed)))
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .map_err(|_| anyhow!("training thread panicked"))?
                    .map(|r| r.q)
                    .map_err(Into::into)
            })
            .collect()
    })
}

/// Play each fold's policy greedily and the rule-based baseline with fresh
/// learners on the same object stream, folds in parallel.
pub fn eval_folds(
    tutor: &SimModel,
    lexicon: &AttributeLexicon,
    config: &RunConfig,
    policies: &[QTable<AgentState>],
    seeds: &[u64],
) -> Result<RlEvaluation> {
    if policies.len() != seeds.len() || seeds.is_empty() {
        return Err(anyhow!("need one policy per fold seed"));
    }
    let runs: Vec<(RunResult, RunResult)> = std::thread::scope(|s| {
        let handles: Vec<_> = seeds
            .iter()
            .zip(policies)
            .map(|(seed, q)| {
                s.spawn(move || -> Result<(RunResult, RunResult)> {
                    let rule = run_learning(Agent::Rule, tutor, lexicon, config, *seed)?;
                    let rl = run_learning(Agent::Greedy(q.clone()), tutor, lexicon, config, *seed)?;
                    Ok((rule, rl))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().map_err(|_| anyhow!("evaluation thread panicked"))?)
            .collect::<Result<_>>()
    })?;
    let mut folds = Vec::new();
    for (i, (rule, rl)) in runs.iter().enumerate() {
        folds.push(FoldResult {
            fold: i,
            seed: seeds[i],
            rule_r_perf: rule.r_perf()?,
            rl_r_perf: rl.r_perf()?,
            rule_accuracy: rule.final_accuracy(),
            rl_accuracy: rl.final_accuracy(),
            rule_cost: rule.curve.last().map_or(0.0, |p| p.cumulative_cost),
            rl_cost: rl.curve.last().map_or(0.0, |p| p.cumulative_cost),
            rl_capped: rl.capped,
        });
    }
    let n = folds.len() as f64;
    let mean = |f: fn(&FoldResult) -> f64| folds.iter().map(f).sum::<f64>() / n;
    let summary = RlSummary {
        folds: folds.len(),
        rule_r_perf: mean(|f| f.rule_r_perf),
        rl_r_perf: mean(|f| f.rl_r_perf),
        r_perf_ratio: mean(|f| f.rl_r_perf) / mean(|f| f.rule_r_perf),
        rule_accuracy: mean(|f| f.rule_accuracy),
        rl_accuracy: mean(|f| f.rl_accuracy),
    };
    let rule_curve = PerfCurve::mean(&runs.iter().map(|r| r.0.curve.clone()).collect::<Vec<_>>())?;
    let rl_curve = PerfCurve::mean(&runs.iter().map(|r| r.1.curve.clone()).collect::<Vec<_>>())?;
    Ok(RlEvaluation {
        folds,
        rule_curve,
        rl_curve,
        summary,
    })
}

/// Per-fold seeds derived from a stage seed.
pub fn fold_seeds(root: u64, stage: &str, folds: usize) -> Vec<u64> {
    (0..folds).map(|k| stage_seed(root, &format!("{stage}/{k}"))).collect()
}

/// Run every stage and write `manifest.json` listing each artifact with its
/// content hash. The same config always yields the same manifest.
pub fn run_pipeline(cfg: &ExperimentConfig) -> Result<Manifest> {
    stage("config", || cfg.validate())?;
    let lexicon = cfg.lexicon()?;
    let mut out = Out {
        dir: cfg.output_dir.clone(),
        files: Vec::new(),
    };
    std::fs::create_dir_all(&out.dir).with_context(|| format!("creating {}", out.dir.display()))?;
    out.json("config.json", cfg)?;

    let corpus = stage("data", || match &cfg.input {
        Some(input) => {
            let corpus = ingest(&input.path, input.format, cfg.gap_ms)?;
            out.write("corpus/corpus.json", &io::corpus_to_bytes(&corpus))?;
            Ok(corpus)
        }
        None => {
            let params = wordtutor_core::corpus::SynthParams {
                seed: stage_seed(cfg.seed, "synth"),
                ..cfg.synth.clone()
            };
            let synth = generate_synthetic_corpus(&lexicon, &params)?;
            out.write("corpus/keystrokes.jsonl", &io::log_to_bytes(&synth.events))?;
            out.write("corpus/corpus.json", &io::corpus_to_bytes(&synth.corpus))?;
            stage("segment", || {
                let seg = segment_log(&synth.events, cfg.gap_ms)?;
                out.write("corpus/segmented.json", &io::corpus_to_bytes(&seg))?;
                let boundaries = |c: &Corpus| -> Vec<(String, u64, u64, String)> {
                    c.dialogues
                        .iter()
                        .flat_map(|d| {
                            d.turns
                                .iter()
                                .map(|t| (d.id.clone(), t.start_ms, t.end_ms, t.text.clone()))
                        })
                        .collect()
                };
                let check = serde_json::json!({
                    "dialogues": seg.dialogues.len(),
                    "turns": seg.turn_count(),
                    "matches_generator": boundaries(&seg) == boundaries(&synth.corpus),
                });
                out.json("corpus/segmentation.json", &check)
            })?;
            Ok(synth.corpus)
        }
    })?;

    stage("stats", || {
        let stats = compute_stats(&corpus);
        out.write("corpus/stats.csv", stats.to_csv().as_bytes())?;
        out.json("corpus/stats.json", &stats)
    })?;

    let (train, heldout) = split_corpus(&corpus, cfg.sim.train_fraction, stage_seed(cfg.seed, "split"));
    let model = stage("sim-train", || {
        let m = SimModel::train(&train, cfg.sim.level, cfg.sim.n, &lexicon)?;
        out.write("sim/model.json", m.to_json().as_bytes())?;
        Ok(m)
    })?;

    stage("sim-eval", || {
        let report = evaluate(&model, &heldout, cfg.sim.level, &lexicon)?;
        out.write("sim/eval.csv", report.to_csv().as_bytes())?;
        out.json("sim/eval.json", &report)?;
        let mut levels = String::from("level,keys,accuracy,mean_kld\n");
        for level in Level::ALL {
            let m = SimModel::train(&train, level, cfg.sim.n, &lexicon)?;
            let r = evaluate(&m, &heldout, level, &lexicon)?;
            let _ = writeln!(levels, "{},{},{},{}", level, r.keys, r.accuracy, r.mean_kld);
        }
        out.write("sim/levels.csv", levels.as_bytes())
    })?;

    // the policy is trained against a tutor built from all training data
    let policies = stage("rl-train", || {
        let seeds = fold_seeds(cfg.seed, "rl-train", cfg.rl.folds);
        let qs = train_folds(&model, &lexicon, &cfg.rl.train, &seeds)?;
        for (k, q) in qs.iter().enumerate() {
            out.json(&format!("rl/policy_{k:02}.json"), q)?;
        }
        Ok(qs)
    })?;

    stage("rl-eval", || {
        let seeds = fold_seeds(cfg.seed, "rl-eval", cfg.rl.folds);
        let ev = eval_folds(&model, &lexicon, &cfg.rl.run, &policies, &seeds)?;
        out.write("rl/folds.csv", ev.folds_csv().as_bytes())?;
        out.write("rl/curve_rule.csv", ev.rule_curve.to_csv().as_bytes())?;
        out.write("rl/curve_rl.csv", ev.rl_curve.to_csv().as_bytes())?;
        out.json("rl/summary.json", &ev.summary)
    })?;

    let mut files = out.files.clone();
    files.sort_by(|a, b| a.path.cmp(&b.path));
    let manifest = Manifest { seed: cfg.seed, files };
    write_manifest(&cfg.output_dir, &manifest)?;
    Ok(manifest)
}

pub fn write_manifest(dir: &Path, manifest: &Manifest) -> Result<()> {
    let mut v = serde_json::to_vec_pretty(manifest)?;
    v.push(b'\n');
    std::fs::write(dir.join("manifest.json"), v)?;
    Ok(())
}
