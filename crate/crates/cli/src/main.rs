use std::io::BufRead;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wordtutor_chat::{Hub, ServerConfig};
use wordtutor_cli::pipeline::{eval_folds, fold_seeds, train_folds};
use wordtutor_cli::{ingest, read_lexicon, run_pipeline, segment_log, ExperimentConfig, InputFormat};
use wordtutor_core::agent::{train_policy, AgentState, QTable, RunConfig, TrainConfig};
use wordtutor_core::corpus::{
    clean, compute_stats, generate_synthetic_corpus, interpret_learner_text, io, CleaningRules, SynthParams,
};
use wordtutor_core::eval::evaluate;
use wordtutor_core::model::{AttributeLexicon, Color, Shape, VisualObject};
use wordtutor_core::sim::{DialogueState, Level, SimModel};

#[derive(Parser)]
#[command(name = "wordtutor", version, about = "Grounded word-learning dialogue toolkit")]
struct Cli {
    /// Lexicon file (JSON or TOML); the stock lexicon when omitted.
    #[arg(long, global = true)]
    lexicon: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the chat relay server.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// JSON file with a `sessions` list.
        #[arg(long)]
        session_config: PathBuf,
        #[arg(long)]
        log_dir: PathBuf,
    },
    #[command(subcommand)]
    Corpus(CorpusCmd),
    #[command(subcommand)]
    Sim(SimCmd),
    #[command(subcommand)]
    Rl(RlCmd),
    /// Run the whole pipeline from one config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the config's root seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the number of evaluation folds.
        #[arg(long)]
        folds: Option<usize>,
    },
    /// Convert external data into the corpus format and print statistics.
    Ingest {
        #[arg(long, default_value = "json")]
        format: InputFormat,
        #[arg(long, default_value_t = 1100)]
        gap_ms: u64,
        input: PathBuf,
        output: PathBuf,
    },
}

#[derive(Subcommand)]
enum CorpusCmd {
    /// Keystroke log to turns and dialogues.
    Segment {
        #[arg(long, default_value_t = 1100)]
        gap_ms: u64,
        input: PathBuf,
        output: PathBuf,
    },
    Stats {
        input: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    Clean {
        /// Rules file (JSON); default emoticon removal when omitted.
        #[arg(long)]
        rules: Option<PathBuf>,
        /// Where to write the change report.
        #[arg(long)]
        report: Option<PathBuf>,
        input: PathBuf,
        output: PathBuf,
    },
    /// Generate a synthetic corpus plus its keystroke log.
    Synth {
        /// Generator parameters (TOML or JSON).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        dialogues: Option<usize>,
        /// Also write the keystroke log here.
        #[arg(long)]
        log: Option<PathBuf>,
        output: PathBuf,
    },
}

#[derive(Subcommand)]
enum SimCmd {
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value = "act")]
        level: Level,
        #[arg(long, default_value_t = 3)]
        n: usize,
        output: PathBuf,
    },
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Talk to the simulated tutor: one learner utterance per stdin line.
    Respond {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value = "red")]
        color: String,
        #[arg(long, default_value = "square")]
        shape: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum RlCmd {
    /// Train a policy against a simulated tutor.
    Train {
        #[arg(long)]
        sim: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        train: TrainArgs,
        output: PathBuf,
    },
    /// Compare learned policies with the rule-based baseline over folds.
    Eval {
        #[arg(long)]
        sim: PathBuf,
        /// A trained policy used for every fold; without it each fold
        /// trains its own.
        #[arg(long)]
        policy: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        folds: usize,
        #[arg(long, default_value_t = 500)]
        instances: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        train: TrainArgs,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, default_value_t = 500)]
    episodes: usize,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, default_value_t = 0.2)]
    epsilon: f64,
}

impl TrainArgs {
    fn config(&self) -> TrainConfig {
        let mut c = TrainConfig {
            episodes: self.episodes,
            ..TrainConfig::default()
        };
        c.learning.alpha = self.alpha;
        c.learning.gamma = self.gamma;
        c.learning.epsilon = self.epsilon;
        c
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    std::fs::write(path, v).with_context(|| format!("writing {}", path.display()))
}

fn load_model(path: &Path) -> Result<SimModel> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(SimModel::from_json(&text)?)
}

fn run(cli: Cli) -> Result<()> {
    let lexicon = match &cli.lexicon {
        Some(p) => read_lexicon(p)?,
        None => AttributeLexicon::default(),
    };
    match cli.command {
        Command::Serve {
            port,
            host,
            session_config,
            log_dir,
        } => {
            let bytes =
                std::fs::read(&session_config).with_context(|| format!("reading {}", session_config.display()))?;
            let hub = Hub::new(ServerConfig::from_json(&bytes)?, Some(&log_dir))?;
            let addr: SocketAddr = format!("{host}:{port}").parse().context("listen address")?;
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind(addr).await?;
                log::info!(
                    "serving {} session(s) on {}",
                    hub.session_ids().len(),
                    listener.local_addr()?
                );
                wordtutor_chat::serve(listener, hub).await
            })?;
        }
        Command::Corpus(cmd) => corpus_cmd(cmd, &lexicon)?,
        Command::Sim(cmd) => sim_cmd(cmd, &lexicon)?,
        Command::Rl(cmd) => rl_cmd(cmd, &lexicon)?,
        Command::Run {
            config,
            seed,
            out,
            folds,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(o) = out {
                cfg.output_dir = o;
            }
            if let Some(f) = folds {
                cfg.rl.folds = f;
            }
            let m = run_pipeline(&cfg)?;
            println!(
                "{} artifacts in {}",
                m.files.len(),
                cfg.output_dir.join("manifest.json").display()
            );
        }
        Command::Ingest {
            format,
            gap_ms,
            input,
            output,
        } => {
            let corpus = ingest(&input, format, gap_ms)?;
            io::write_corpus(&output, &corpus)?;
            print_stats(&corpus);
        }
    }
    Ok(())
}

fn print_stats(corpus: &wordtutor_core::model::Corpus) {
    let s = compute_stats(corpus);
    println!("dialogues {}", s.dialogue_count);
    println!("turns {}", s.turn_count);
    println!("mean turns per dialogue {}", s.mean_display());
    println!(
        "overlaps {} ({:.2} per dialogue)",
        s.overlap_count, s.overlaps_per_dialogue
    );
}

fn corpus_cmd(cmd: CorpusCmd, lexicon: &AttributeLexicon) -> Result<()> {
    match cmd {
        CorpusCmd::Segment { gap_ms, input, output } => {
            let events = io::read_log(&input)?;
            let corpus = segment_log(&events, gap_ms)?;
            io::write_corpus(&output, &corpus)?;
            println!("{} dialogues, {} turns", corpus.dialogues.len(), corpus.turn_count());
        }
        CorpusCmd::Stats { input, csv, json } => {
            let corpus = io::read_corpus(&input)?;
            let stats = compute_stats(&corpus);
            if let Some(p) = csv {
                std::fs::write(&p, stats.to_csv())?;
            }
            if let Some(p) = json {
                write_json(&p, &stats)?;
            }
            print_stats(&corpus);
        }
        CorpusCmd::Clean {
            rules,
            report,
            input,
            output,
        } => {
            let rules = match rules {
                Some(p) => {
                    serde_json::from_slice(&std::fs::read(&p)?).with_context(|| format!("parsing {}", p.display()))?
                }
                None => CleaningRules::with_default_emoticons(),
            };
            let corpus = io::read_corpus(&input)?;
            let (cleaned, rep) = clean(&corpus, &rules)?;
            io::write_corpus(&output, &cleaned)?;
            if let Some(p) = report {
                write_json(&p, &rep)?;
            }
            println!("{} changes ({} substitutions)", rep.changes.len(), rep.substitutions());
        }
        CorpusCmd::Synth {
            config,
            seed,
            dialogues,
            log,
            output,
        } => {
            let mut params: SynthParams = match config {
                Some(p) => {
                    let text = std::fs::read_to_string(&p)?;
                    if p.extension().is_some_and(|e| e == "json") {
                        serde_json::from_str(&text)?
                    } else {
                        toml::from_str(&text)?
                    }
                }
                None => SynthParams::default(),
            };
            if let Some(s) = seed {
                params.seed = s;
            }
            if let Some(d) = dialogues {
                params.dialogues = d;
            }
            let out = generate_synthetic_corpus(lexicon, &params)?;
            io::write_corpus(&output, &out.corpus)?;
            if let Some(p) = log {
                io::write_log(&p, &out.events)?;
            }
            print_stats(&out.corpus);
        }
    }
    Ok(())
}

fn parse_label<T: Copy>(all: &[T], name: impl Fn(T) -> &'static str, s: &str) -> Result<T> {
    match all.iter().find(|x| name(**x) == s) {
        Some(x) => Ok(*x),
        None => bail!("unknown label `{s}`"),
    }
}

fn sim_cmd(cmd: SimCmd, lexicon: &AttributeLexicon) -> Result<()> {
    match cmd {
        SimCmd::Train {
            corpus,
            level,
            n,
            output,
        } => {
            let corpus = io::read_corpus(&corpus)?;
            let m = SimModel::train(&corpus, level, n, lexicon)?;
            std::fs::write(&output, m.to_json())?;
            println!(
                "trained {level} model, n={n}, {} vocabulary items",
                m.vocabulary().len()
            );
        }
        SimCmd::Eval {
            model,
            corpus,
            csv,
            json,
        } => {
            let m = load_model(&model)?;
            let corpus = io::read_corpus(&corpus)?;
            let r = evaluate(&m, &corpus, m.level(), m.lexicon())?;
            if let Some(p) = csv {
                std::fs::write(&p, r.to_csv())?;
            }
            if let Some(p) = json {
                write_json(&p, &r)?;
            }
            println!(
                "level {} keys {} accuracy {:.4} mean_kld {:.6}",
                r.level, r.keys, r.accuracy, r.mean_kld
            );
        }
        SimCmd::Respond {
            model,
            color,
            shape,
            seed,
        } => {
            let m = load_model(&model)?;
            let object = VisualObject::new(
                parse_label(&Color::ALL, Color::name, &color)?,
                parse_label(&Shape::ALL, Shape::name, &shape)?,
            );
            let mut state = DialogueState::new(object);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for line in std::io::stdin().lock().lines() {
                let line = line?;
                let acts = interpret_learner_text(&line, m.lexicon());
                let r = m.respond(&line, &acts, &mut state, &mut rng)?;
                println!("{}\t{}", r.utterance, r.acts);
                if r.finished {
                    break;
                }
            }
        }
    }
    Ok(())
}

fn rl_cmd(cmd: RlCmd, lexicon: &AttributeLexicon) -> Result<()> {
    match cmd {
        RlCmd::Train {
            sim,
            seed,
            train,
            output,
        } => {
            let m = load_model(&sim)?;
            let r = train_policy(&m, lexicon, &train.config(), seed)?;
            write_json(&output, &r.q)?;
            println!(
                "{} episodes: {} completed, {} capped, tutoring cost {}",
                train.episodes, r.completed, r.capped, r.total_cost
            );
        }
        RlCmd::Eval {
            sim,
            policy,
            folds,
            instances,
            seed,
            train,
            out_dir,
        } => {
            if folds == 0 {
                bail!("--folds must be positive");
            }
            let m = load_model(&sim)?;
            let policies: Vec<QTable<AgentState>> = match policy {
                Some(p) => {
                    let q: QTable<AgentState> = serde_json::from_slice(&std::fs::read(&p)?)?;
                    vec![q; folds]
                }
                None => train_folds(&m, lexicon, &train.config(), &fold_seeds(seed, "rl-train", folds))?,
            };
            let run = RunConfig {
                instances,
                ..RunConfig::default()
            };
            let ev = eval_folds(&m, lexicon, &run, &policies, &fold_seeds(seed, "rl-eval", folds))?;
            std::fs::create_dir_all(&out_dir)?;
            std::fs::write(out_dir.join("folds.csv"), ev.folds_csv())?;
            std::fs::write(out_dir.join("curve_rule.csv"), ev.rule_curve.to_csv())?;
            std::fs::write(out_dir.join("curve_rl.csv"), ev.rl_curve.to_csv())?;
            write_json(&out_dir.join("summary.json"), &ev.summary)?;
            let s = &ev.summary;
            println!(
                "folds {} rule R_perf {:.6} rl R_perf {:.6} ratio {:.3} accuracy rule {:.3} rl {:.3}",
                s.folds, s.rule_r_perf, s.rl_r_perf, s.r_perf_ratio, s.rule_accuracy, s.rl_accuracy
            );
        }
    }
    Ok(())
}
