use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{grid, make_object_sequence, AttributeLexicon, Category, VisualObject};
use crate::sim::SimModel;

use super::episode::{run_episode, Controller, EpisodeConfig};
use super::grounding::GroundingModel;
use super::qtable::{LearningParams, QTable};
use super::state::{AgentAction, AgentState};
use super::AgentError;

/// One point of the accuracy-vs-cost curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub instances: usize,
    pub cumulative_cost: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PerfCurve {
    pub points: Vec<CurvePoint>,
}

impl PerfCurve {
    pub fn last(&self) -> Option<&CurvePoint> {
        self.points.last()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("instances,cumulative_cost,accuracy\n");
        for p in &self.points {
            out.push_str(&format!("{},{},{}\n", p.instances, p.cumulative_cost, p.accuracy));
        }
        out
    }

    /// Point-wise mean of curves sampled at the same instance counts.
    pub fn mean(curves: &[PerfCurve]) -> Result<PerfCurve, AgentError> {
        let first = curves
            .first()
            .ok_or_else(|| AgentError::InvalidParams("no curves to average".into()))?;
        let n = curves.len() as f64;
        let mut points = Vec::with_capacity(first.points.len());
        for (i, p) in first.points.iter().enumerate() {
            let mut cost = 0.0;
            let mut acc = 0.0;
            for c in curves {
                let q =
                    c.points.get(i).filter(|q| q.instances == p.instances).ok_or_else(|| {
                        AgentError::InvalidParams("curves sampled at different instance counts".into())
                    })?;
                cost += q.cumulative_cost;
                acc += q.accuracy;
            }
            points.push(CurvePoint {
                instances: p.instances,
                cumulative_cost: cost / n,
                accuracy: acc / n,
            });
        }
        Ok(PerfCurve { points })
    }
}

/// Accuracy gained per unit of tutoring cost over the whole curve.
pub fn perf_ratio(curve: &PerfCurve) -> Result<f64, AgentError> {
    let (first, last) = match (curve.points.first(), curve.points.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(AgentError::InvalidParams("empty curve".into())),
    };
    if last.cumulative_cost <= 0.0 {
        return Err(AgentError::ZeroCost);
    }
    Ok((last.accuracy - first.accuracy) / last.cumulative_cost)
}

/// Fraction of held-out (object, attribute) pairs the agent names correctly.
pub fn heldout_accuracy(g: &GroundingModel, objects: &[VisualObject], lexicon: &AttributeLexicon) -> f64 {
    let mut correct = 0;
    for o in objects {
        for k in Category::ALL {
            if g.name(k, o).as_deref() == Some(o.word(lexicon, k)) {
                correct += 1;
            }
        }
    }
    correct as f64 / (2 * objects.len()) as f64
}

/// One noisy instance of every grid cell.
pub fn heldout_objects(seed: u64) -> Vec<VisualObject> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    grid()
        .into_iter()
        .map(|(c, s)| VisualObject::with_noise(c, s, &mut rng))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub instances: usize,
    pub eval_every: usize,
    pub learning: LearningParams,
    pub episode: EpisodeConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            instances: 500,
            eval_every: 10,
            learning: LearningParams::default(),
            episode: EpisodeConfig::default(),
        }
    }
}

/// Which learner policy a run uses.
#[derive(Debug, Clone, PartialEq)]
pub enum Agent {
    Rule,
    /// SARSA from the given table (usually empty), updated as it goes.
    Sarsa(QTable<AgentState>),
    /// A fixed table played greedily.
    Greedy(QTable<AgentState>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub curve: PerfCurve,
    /// Final table for SARSA runs.
    pub q: Option<QTable<AgentState>>,
    pub grounding: GroundingModel,
    pub completed: usize,
    pub capped: usize,
    pub total_penalties: f64,
}

impl RunResult {
    pub fn r_perf(&self) -> Result<f64, AgentError> {
        perf_ratio(&self.curve)
    }

    pub fn final_accuracy(&self) -> f64 {
        self.curve.last().map_or(0.0, |p| p.accuracy)
    }
}

/// A fresh learner meets `config.instances` objects one dialogue each,
/// starting with no word knowledge. Held-out accuracy is measured before the
/// first dialogue and after every `eval_every` dialogues.
pub fn run_learning(
    agent: Agent,
    tutor: &SimModel,
    lexicon: &AttributeLexicon,
    config: &RunConfig,
    seed: u64,
) -> Result<RunResult, AgentError> {
    config.learning.validate()?;
    if config.instances == 0 || config.eval_every == 0 {
        return Err(AgentError::InvalidParams(
            "instances and eval_every must be positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let objects = make_object_sequence(lexicon, config.instances, rng.gen())?;
    let heldout = heldout_objects(rng.gen());
    let mut grounding = GroundingModel::new();
    let (mut q, greedy) = match agent {
        Agent::Rule => (None, false),
        Agent::Sarsa(q) => (Some(q), false),
        Agent::Greedy(q) => (Some(q), true),
    };
    if let Some(q) = &q {
        if q.n_actions() != AgentAction::ALL.len() {
            return Err(AgentError::InvalidParams(format!(
                "q-table has {} actions",
                q.n_actions()
            )));
        }
    }
    let mut curve = PerfCurve::default();
    let mut cost = 0.0;
    let (mut completed, mut capped, mut penalties) = (0, 0, 0.0);
    curve.points.push(CurvePoint {
        instances: 0,
        cumulative_cost: 0.0,
        accuracy: heldout_accuracy(&grounding, &heldout, lexicon),
    });
    for (i, object) in objects.iter().enumerate() {
        let mut controller = match (&mut q, greedy) {
            (None, _) => Controller::Rule,
            (Some(q), true) => Controller::Greedy(q),
            (Some(q), false) => Controller::Sarsa {
                q,
                params: config.learning,
            },
        };
        let ep = run_episode(
            &mut controller,
            tutor,
            object,
            &mut grounding,
            &config.episode,
            &mut rng,
        )?;
        cost += ep.ledger.total;
        completed += ep.completed as usize;
        capped += ep.capped as usize;
        penalties += ep.penalties;
        if (i + 1) % config.eval_every == 0 || i + 1 == objects.len() {
            curve.points.push(CurvePoint {
                instances: i + 1,
                cumulative_cost: cost,
                accuracy: heldout_accuracy(&grounding, &heldout, lexicon),
            });
        }
    }
    let q = if greedy { None } else { q };
    Ok(RunResult {
        curve,
        q,
        grounding,
        completed,
        capped,
        total_penalties: penalties,
    })
}

/// Policy training: SARSA over a stream of single-object dialogues, each
/// with a learner whose word knowledge is drawn at random, so the table sees
/// every stage of learning rather than only the first few dialogues.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub episodes: usize,
    /// Optimistic starting value of every table entry.
    pub initial_q: f64,
    /// Each word gets `0..=max_prior` positive observations before a dialogue.
    pub max_prior: u32,
    pub learning: LearningParams,
    pub episode: EpisodeConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            episodes: 500,
            initial_q: 10.0,
            max_prior: 40,
            learning: LearningParams::default(),
            episode: EpisodeConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainResult {
    pub q: QTable<AgentState>,
    pub completed: usize,
    pub capped: usize,
    pub total_cost: f64,
    pub total_penalties: f64,
}

/// A learner that has seen each word between zero and `max_prior` times.
pub fn random_prior_grounding<R: Rng + ?Sized>(
    lexicon: &AttributeLexicon,
    max_prior: u32,
    rng: &mut R,
) -> Result<GroundingModel, AgentError> {
    let mut g = GroundingModel::new();
    for k in Category::ALL {
        for label in 0..3 {
            for _ in 0..rng.gen_range(0..=max_prior) {
                g.update(lexicon.word(k, label), k, label, crate::model::Polarity::Pos)?;
            }
        }
    }
    Ok(g)
}

/// Learn a policy table against the simulated tutor.
pub fn train_policy(
    tutor: &SimModel,
    lexicon: &AttributeLexicon,
    config: &TrainConfig,
    seed: u64,
) -> Result<TrainResult, AgentError> {
    config.learning.validate()?;
    if config.episodes == 0 || !config.initial_q.is_finite() {
        return Err(AgentError::InvalidParams(
            "episodes must be positive and initial_q finite".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let objects = make_object_sequence(lexicon, config.episodes, rng.gen())?;
    let mut q = QTable::with_initial(AgentAction::ALL.len(), config.initial_q);
    let mut out = TrainResult {
        q: QTable::new(AgentAction::ALL.len()),
        completed: 0,
        capped: 0,
        total_cost: 0.0,
        total_penalties: 0.0,
    };
    for object in &objects {
        let mut g = random_prior_grounding(lexicon, config.max_prior, &mut rng)?;
        let mut controller = Controller::Sarsa {
            q: &mut q,
            params: config.learning,
        };
        let ep = run_episode(&mut controller, tutor, object, &mut g, &config.episode, &mut rng)?;
        out.completed += ep.completed as usize;
        out.capped += ep.capped as usize;
        out.total_cost += ep.ledger.total;
        out.total_penalties += ep.penalties;
    }
    out.q = q;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(i: usize, c: f64, a: f64) -> CurvePoint {
        CurvePoint {
            instances: i,
            cumulative_cost: c,
            accuracy: a,
        }
    }

    #[test]
    fn ratio_examples() {
        let c = PerfCurve {
            points: vec![pt(0, 0.0, 0.1), pt(10, 100.0, 0.5)],
        };
        assert!((perf_ratio(&c).unwrap() - 0.004).abs() < 1e-15);
        let flat = PerfCurve {
            points: vec![pt(0, 0.0, 0.5), pt(10, 20.0, 0.5)],
        };
        assert_eq!(perf_ratio(&flat).unwrap(), 0.0);
        let free = PerfCurve {
            points: vec![pt(0, 0.0, 0.0), pt(10, 0.0, 1.0)],
        };
        assert!(matches!(perf_ratio(&free), Err(AgentError::ZeroCost)));
    }

    #[test]
    fn curve_mean_and_csv() {
        let a = PerfCurve {
            points: vec![pt(0, 0.0, 0.0), pt(10, 10.0, 1.0)],
        };
        let b = PerfCurve {
            points: vec![pt(0, 0.0, 0.5), pt(10, 30.0, 0.5)],
        };
        let m = PerfCurve::mean(&[a.clone(), b]).unwrap();
        assert_eq!(m.points[1], pt(10, 20.0, 0.75));
        assert_eq!(a.to_csv(), "instances,cumulative_cost,accuracy\n0,0,0\n10,10,1\n");
    }

    #[test]
    fn fresh_learner_names_nothing() {
        let lex = AttributeLexicon::default();
        assert_eq!(heldout_accuracy(&GroundingModel::new(), &heldout_objects(1), &lex), 0.0);
    }
}
