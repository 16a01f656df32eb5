use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::EvalError;

/// Tolerance for "sums to one".
pub const SUM_TOLERANCE: f64 = 1e-9;

/// A finite categorical distribution over string-keyed items. Items are kept
/// in canonical (lexicographic) order, which is also the argmax tie order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Distribution(BTreeMap<String, f64>);

impl Distribution {
    /// Validate and wrap a probability table.
    pub fn new(probs: BTreeMap<String, f64>) -> Result<Self, EvalError> {
        let d = Self(probs);
        d.validate()?;
        Ok(d)
    }

    /// Maximum-likelihood distribution from integer counts.
    pub fn from_counts<'a>(counts: impl IntoIterator<Item = (&'a String, &'a u64)>) -> Self {
        let counts: Vec<_> = counts.into_iter().filter(|(_, c)| **c > 0).collect();
        let total: u64 = counts.iter().map(|(_, c)| **c).sum();
        Self(
            counts
                .into_iter()
                .map(|(k, c)| (k.clone(), *c as f64 / total as f64))
                .collect(),
        )
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        if self.0.is_empty() {
            return Err(EvalError::InvalidDistribution("empty support".into()));
        }
        if let Some((k, p)) = self.0.iter().find(|(_, p)| !(**p >= 0.0 && p.is_finite())) {
            return Err(EvalError::InvalidDistribution(format!("p({k}) = {p}")));
        }
        let s = self.sum();
        if (s - 1.0).abs() > SUM_TOLERANCE {
            return Err(EvalError::InvalidDistribution(format!("sums to {s}")));
        }
        Ok(())
    }

    pub fn sum(&self) -> f64 {
        self.0.values().sum()
    }

    pub fn prob(&self, item: &str) -> f64 {
        self.0.get(item).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, f64)> {
        self.0.iter().map(|(k, p)| (k, *p))
    }

    /// Most probable item; ties go to the first item in canonical order.
    pub fn argmax(&self) -> Option<&str> {
        let mut best: Option<(&String, f64)> = None;
        for (k, p) in self.iter() {
            if best.is_none_or(|(_, b)| p > b) {
                best = Some((k, p));
            }
        }
        best.map(|(k, _)| k.as_str())
    }

    /// Inverse-CDF draw for a uniform `u` in `[0, 1)`.
    pub fn pick(&self, u: f64) -> Option<&str> {
        let mut acc = 0.0;
        let mut last = None;
        for (k, p) in self.iter() {
            if p <= 0.0 {
                continue;
            }
            acc += p;
            last = Some(k.as_str());
            if u < acc {
                return last;
            }
        }
        last
    }

    /// `item=p;item=p` with probabilities to 6 decimals.
    pub fn compact(&self) -> String {
        self.iter()
            .map(|(k, p)| format!("{k}={p:.6}"))
            .collect::<Vec<_>>()
            .join(";")
    }
}

impl FromIterator<(String, f64)> for Distribution {
    fn from_iter<T: IntoIterator<Item = (String, f64)>>(iter: T) -> Self {
        Self(iter.into_iter().collect())
    }
}
