use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::AgentError;

/// SARSA hyper-parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearningParams {
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon: f64,
}

impl Default for LearningParams {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            gamma: 1.0,
            epsilon: 0.2,
        }
    }
}

impl LearningParams {
    pub fn validate(&self) -> Result<(), AgentError> {
        let ok = |x: f64| (0.0..=1.0).contains(&x);
        if ok(self.alpha) && ok(self.gamma) && ok(self.epsilon) {
            Ok(())
        } else {
            Err(AgentError::InvalidParams(format!(
                "{self:?}: alpha, gamma and epsilon must lie in [0, 1]"
            )))
        }
    }
}

/// Tabular action values; unseen entries read as 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Serialize", deserialize = "S: Deserialize<'de> + Ord"))]
pub struct QTable<S> {
    n_actions: usize,
    /// Value of entries never updated.
    #[serde(default)]
    initial: f64,
    #[serde(with = "entries")]
    values: BTreeMap<S, Vec<Option<f64>>>,
}

mod entries {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Entry<S> {
        state: S,
        values: Vec<Option<f64>>,
    }

    pub fn serialize<S: Serialize, Z: Serializer>(m: &BTreeMap<S, Vec<Option<f64>>>, z: Z) -> Result<Z::Ok, Z::Error> {
        z.collect_seq(m.iter().map(|(s, v)| Entry {
            state: s,
            values: v.clone(),
        }))
    }

    pub fn deserialize<'de, S: Deserialize<'de> + Ord, D: Deserializer<'de>>(
        d: D,
    ) -> Result<BTreeMap<S, Vec<Option<f64>>>, D::Error> {
        let v: Vec<Entry<S>> = Vec::deserialize(d)?;
        Ok(v.into_iter().map(|e| (e.state, e.values)).collect())
    }
}

impl<S: Ord + Clone> QTable<S> {
    pub fn new(n_actions: usize) -> Self {
        Self::with_initial(n_actions, 0.0)
    }

    /// Table whose unseen entries read as `initial` (e.g. an optimistic
    /// upper bound on the return, to make every action worth a try).
    pub fn with_initial(n_actions: usize, initial: f64) -> Self {
        Self {
            n_actions,
            initial,
            values: BTreeMap::new(),
        }
    }

    pub fn initial(&self) -> f64 {
        self.initial
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn get(&self, s: &S, a: usize) -> f64 {
        self.values.get(s).and_then(|v| v[a]).unwrap_or(self.initial)
    }

    pub fn set(&mut self, s: &S, a: usize, q: f64) {
        let n = self.n_actions;
        self.values.entry(s.clone()).or_insert_with(|| vec![None; n])[a] = Some(q);
    }

    /// Highest-valued action, counting never-updated entries at the initial
    /// value; ties go to the lowest index.
    pub fn argmax(&self, s: &S) -> usize {
        let mut best = 0;
        for a in 1..self.n_actions {
            if self.get(s, a) > self.get(s, best) {
                best = a;
            }
        }
        best
    }

    /// Highest-valued action among those actually updated in `s` (ties to
    /// the lowest index); action 0 when none has been.
    pub fn argmax_tried(&self, s: &S) -> usize {
        let Some(v) = self.values.get(s) else { return 0 };
        let mut best: Option<(usize, f64)> = None;
        for (a, q) in v.iter().enumerate() {
            if let Some(q) = q {
                if best.is_none_or(|(_, b)| *q > b) {
                    best = Some((a, *q));
                }
            }
        }
        best.map_or(0, |(a, _)| a)
    }

    /// Highest-valued action among those with `allowed(a)`; never-updated
    /// entries count at the initial value, or are skipped when `tried_only`.
    /// Ties go to the lowest index. Falls back to the first allowed action,
    /// or 0 when nothing is allowed.
    pub fn argmax_among(&self, s: &S, allowed: impl Fn(usize) -> bool, tried_only: bool) -> usize {
        let mut best: Option<(usize, f64)> = None;
        for a in (0..self.n_actions).filter(|a| allowed(*a)) {
            if tried_only && !self.tried(s, a) {
                continue;
            }
            let q = self.get(s, a);
            if best.is_none_or(|(_, b)| q > b) {
                best = Some((a, q));
            }
        }
        best.map(|(a, _)| a)
            .or_else(|| (0..self.n_actions).find(|a| allowed(*a)))
            .unwrap_or(0)
    }

    /// Whether `(s, a)` has ever been updated.
    pub fn tried(&self, s: &S, a: usize) -> bool {
        self.values.get(s).is_some_and(|v| v[a].is_some())
    }

    pub fn states(&self) -> impl Iterator<Item = &S> {
        self.values.keys()
    }

    /// Check the stored rows have the declared width and finite values.
    pub fn validate(&self) -> Result<(), AgentError> {
        for v in self.values.values() {
            if v.len() != self.n_actions || v.iter().flatten().any(|q| !q.is_finite()) || !self.initial.is_finite() {
                return Err(AgentError::InvalidParams("malformed q-table row".into()));
            }
        }
        Ok(())
    }
}

/// ε-greedy: the greedy action with probability `1 - epsilon`, otherwise a
/// uniformly random one.
pub fn select_action<S: Ord + Clone, R: Rng + ?Sized>(q: &QTable<S>, s: &S, epsilon: f64, rng: &mut R) -> usize {
    select_action_among(q, s, |_| true, epsilon, rng)
}

/// Epsilon-greedy restricted to the actions with `allowed(a)`.
pub fn select_action_among<S: Ord + Clone, R: Rng + ?Sized>(
    q: &QTable<S>,
    s: &S,
    allowed: impl Fn(usize) -> bool,
    epsilon: f64,
    rng: &mut R,
) -> usize {
    if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
        let legal: Vec<usize> = (0..q.n_actions()).filter(|a| allowed(*a)).collect();
        if legal.is_empty() {
            return rng.gen_range(0..q.n_actions());
        }
        legal[rng.gen_range(0..legal.len())]
    } else {
        q.argmax_among(s, allowed, false)
    }
}

/// `Q(s,a) += alpha * (r + gamma * Q(s',a') - Q(s,a))`; pass `None` for a
/// terminal successor.
pub fn sarsa_update<S: Ord + Clone>(
    q: &mut QTable<S>,
    s: &S,
    a: usize,
    r: f64,
    next: Option<(&S, usize)>,
    alpha: f64,
    gamma: f64,
) {
    let old = q.get(s, a);
    let future = next.map_or(0.0, |(s2, a2)| q.get(s2, a2));
    q.set(s, a, old + alpha * (r + gamma * future - old));
}
