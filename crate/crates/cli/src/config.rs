use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use wordtutor_core::agent::{RunConfig, TrainConfig};
use wordtutor_core::corpus::{SynthParams, DEFAULT_GAP_MS};
use wordtutor_core::model::AttributeLexicon;
use wordtutor_core::sim::{Level, DEFAULT_N};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    /// The corpus JSON format.
    Json,
    /// A chat-service keystroke log.
    Chatlog,
}

impl FromStr for InputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(InputFormat::Json),
            "chatlog" => Ok(InputFormat::Chatlog),
            other => Err(format!("unknown format `{other}` (expected json or chatlog)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputConfig {
    pub path: PathBuf,
    pub format: InputFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub level: Level,
    pub n: usize,
    /// Share of dialogues used for training; the rest is held out.
    pub train_fraction: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            level: Level::Act,
            n: DEFAULT_N,
            train_fraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RlConfig {
    pub folds: usize,
    pub train: TrainConfig,
    pub run: RunConfig,
}

impl Default for RlConfig {
    fn default() -> Self {
        Self {
            folds: 20,
            train: TrainConfig::default(),
            run: RunConfig::default(),
        }
    }
}

/// Everything a pipeline run depends on besides the code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Lexicon file; the stock lexicon when absent.
    pub lexicon: Option<PathBuf>,
    /// Chat-service session file, validated when given.
    pub session_config: Option<PathBuf>,
    /// Existing data to use instead of a synthetic corpus.
    pub input: Option<InputConfig>,
    pub gap_ms: u64,
    pub synth: SynthParams,
    pub sim: SimConfig,
    pub rl: RlConfig,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            lexicon: None,
            session_config: None,
            input: None,
            gap_ms: DEFAULT_GAP_MS,
            synth: SynthParams::default(),
            sim: SimConfig::default(),
            rl: RlConfig::default(),
            output_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    /// Parse a TOML or JSON file (by extension). Relative paths inside are
    /// taken relative to the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let mut cfg: ExperimentConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        } else {
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        };
        let base = path.parent().unwrap_or(Path::new("."));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = cfg.lexicon.as_mut() {
            rebase(p);
        }
        if let Some(p) = cfg.session_config.as_mut() {
            rebase(p);
        }
        if let Some(i) = cfg.input.as_mut() {
            rebase(&mut i.path);
        }
        rebase(&mut cfg.output_dir);
        Ok(cfg)
    }

    /// Check every field that can be checked before running; errors name
    /// the offending field.
    pub fn validate(&self) -> Result<()> {
        if let Some(p) = &self.lexicon {
            crate::read_lexicon(p).context("config field `lexicon`")?;
        }
        if let Some(p) = &self.session_config {
            let bytes = std::fs::read(p)
                .with_context(|| format!("config field `session_config`: cannot read {}", p.display()))?;
            wordtutor_chat::ServerConfig::from_json(&bytes).context("config field `session_config`")?;
        }
        if let Some(i) = &self.input {
            if !i.path.exists() {
                bail!("config field `input.path`: {} does not exist", i.path.display());
            }
        }
        if self.gap_ms == 0 {
            bail!("config field `gap_ms` must be positive");
        }
        self.synth.validate().context("config field `synth`")?;
        if self.sim.n == 0 {
            bail!("config field `sim.n` must be at least 1");
        }
        if !(self.sim.train_fraction > 0.0 && self.sim.train_fraction < 1.0) {
            bail!("config field `sim.train_fraction` must lie strictly between 0 and 1");
        }
        if self.rl.folds == 0 {
            bail!("config field `rl.folds` must be positive");
        }
        self.rl
            .train
            .learning
            .validate()
            .context("config field `rl.train.learning`")?;
        Ok(())
    }

    pub fn lexicon(&self) -> Result<AttributeLexicon> {
        match &self.lexicon {
            Some(p) => crate::read_lexicon(p).context("config field `lexicon`"),
            None => Ok(AttributeLexicon::default()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_toml_is_the_default() {
        let cfg: ExperimentConfig = toml::from_str("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(toml::from_str::<ExperimentConfig>("sed = 3").is_err());
    }

    #[test]
    fn missing_lexicon_names_the_field() {
        let cfg = ExperimentConfig {
            lexicon: Some("/nonexistent/lex.json".into()),
            ..Default::default()
        };
        let err = format!("{:#}", cfg.validate().unwrap_err());
        assert!(err.contains("lexicon"), "{err}");
    }
}
