use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{is_valid_word, Category, Polarity, VisualObject};

use super::AgentError;

/// Laplace smoothing constant for label posteriors.
pub const LAPLACE_ALPHA: f64 = 1.0;

/// Words-as-classifiers over discrete labels: per category, per word, the
/// evidence mass for each of the three ground labels.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroundingModel {
    color: BTreeMap<String, [f64; Category::LABELS]>,
    shape: BTreeMap<String, [f64; Category::LABELS]>,
}

impl GroundingModel {
    pub fn new() -> Self {
        Self::default()
    }

    fn table(&self, category: Category) -> &BTreeMap<String, [f64; Category::LABELS]> {
        match category {
            Category::Color => &self.color,
            Category::Shape => &self.shape,
        }
    }

    fn table_mut(&mut self, category: Category) -> &mut BTreeMap<String, [f64; Category::LABELS]> {
        match category {
            Category::Color => &mut self.color,
            Category::Shape => &mut self.shape,
        }
    }

    /// Add one observation. Positive evidence adds 1 to `(word, label)`;
    /// negative evidence spreads 1 over the other labels.
    pub fn update(
        &mut self,
        word: &str,
        category: Category,
        label: usize,
        polarity: Polarity,
    ) -> Result<(), AgentError> {
        if !is_valid_word(word) {
            return Err(AgentError::InvalidWord(word.to_string()));
        }
        if label >= Category::LABELS {
            return Err(AgentError::InvalidLabel(label));
        }
        let row = self
            .table_mut(category)
            .entry(word.to_string())
            .or_insert([0.0; Category::LABELS]);
        match polarity {
            Polarity::Pos => row[label] += 1.0,
            Polarity::Neg => {
                let share = 1.0 / (Category::LABELS - 1) as f64;
                for (i, v) in row.iter_mut().enumerate() {
                    if i != label {
                        *v += share;
                    }
                }
            }
        }
        Ok(())
    }

    /// `P(label | word)` with Laplace smoothing; uniform for unseen words.
    pub fn posterior(&self, word: &str, category: Category, label: usize) -> f64 {
        let k = Category::LABELS as f64;
        match self.table(category).get(word) {
            Some(row) => {
                let total: f64 = row.iter().sum();
                (row[label] + LAPLACE_ALPHA) / (total + k * LAPLACE_ALPHA)
            }
            None => 1.0 / k,
        }
    }

    /// Words seen so far for a category, in canonical order.
    pub fn words(&self, category: Category) -> impl Iterator<Item = &String> {
        self.table(category).keys()
    }

    /// The word that best names the object's feature-indicated label, and the
    /// posterior of that label under it. Ties go to the first word; with no
    /// words yet the answer is `(None, 1/3)`.
    pub fn classify_confidence(&self, category: Category, object: &VisualObject) -> (Option<String>, f64) {
        let label = object.feature_label(category);
        let mut best: Option<(&String, f64)> = None;
        for w in self.words(category) {
            let p = self.posterior(w, category, label);
            if best.is_none_or(|(_, b)| p > b) {
                best = Some((w, p));
            }
        }
        match best {
            Some((w, p)) => (Some(w.clone()), p),
            None => (None, 1.0 / Category::LABELS as f64),
        }
    }

    /// The word the agent would use for the attribute, if it is at least
    /// even odds.
    pub fn name(&self, category: Category, object: &VisualObject) -> Option<String> {
        match self.classify_confidence(category, object) {
            (Some(w), p) if p >= 0.5 => Some(w),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Color, Shape};
    use proptest::prelude::*;

    fn red() -> VisualObject {
        VisualObject::new(Color::Red, Shape::Square)
    }

    #[test]
    fn two_positives_give_point_six() {
        let mut g = GroundingModel::new();
        g.update("sako", Category::Color, 0, Polarity::Pos).unwrap();
        g.update("sako", Category::Color, 0, Polarity::Pos).unwrap();
        assert!((g.posterior("sako", Category::Color, 0) - 3.0 / 5.0).abs() < 1e-15);
        assert_eq!(
            g.classify_confidence(Category::Color, &red()),
            (Some("sako".into()), 0.6)
        );
    }

    #[test]
    fn fresh_model_is_uniform() {
        let g = GroundingModel::new();
        assert_eq!(g.posterior("sako", Category::Color, 2), 1.0 / 3.0);
        assert_eq!(g.classify_confidence(Category::Shape, &red()), (None, 1.0 / 3.0));
        assert_eq!(g.name(Category::Color, &red()), None);
    }

    #[test]
    fn fifty_positives_are_confident() {
        let mut g = GroundingModel::new();
        for _ in 0..50 {
            g.update("sako", Category::Color, 0, Polarity::Pos).unwrap();
        }
        assert!(g.classify_confidence(Category::Color, &red()).1 > 0.9);
    }

    #[test]
    fn negative_evidence_lowers_the_label() {
        let mut g = GroundingModel::new();
        g.update("tivo", Category::Color, 0, Polarity::Neg).unwrap();
        assert!((g.posterior("tivo", Category::Color, 0) - 1.0 / 4.0).abs() < 1e-15);
        assert!((g.posterior("tivo", Category::Color, 1) - 1.5 / 4.0).abs() < 1e-15);
        assert!(g.update("Bad Word", Category::Color, 0, Polarity::Pos).is_err());
        assert!(g.update("ok", Category::Color, 3, Polarity::Pos).is_err());
    }

    proptest! {
        #[test]
        fn monotone_in_positive_evidence(n in 0usize..60) {
            let mut g = GroundingModel::new();
            let mut last = g.classify_confidence(Category::Color, &red()).1;
            for _ in 0..n {
                g.update("sako", Category::Color, 0, Polarity::Pos).unwrap();
                let c = g.classify_confidence(Category::Color, &red()).1;
                prop_assert!(c >= last);
                last = c;
            }
        }

        #[test]
        fn order_invariant(mut ev in proptest::collection::vec((0usize..3, any::<bool>()), 0..40), seed in any::<u64>()) {
            use rand::{seq::SliceRandom, SeedableRng};
            let build = |ev: &[(usize, bool)]| {
                let mut g = GroundingModel::new();
                for (l, pos) in ev {
                    g.update("sako", Category::Color, *l, if *pos { Polarity::Pos } else { Polarity::Neg }).unwrap();
                }
                g
            };
            let a = build(&ev);
            ev.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let b = build(&ev);
            for l in 0..3 {
                prop_assert!((a.posterior("sako", Category::Color, l) - b.posterior("sako", Category::Color, l)).abs() < 1e-12);
            }
        }
    }
}
