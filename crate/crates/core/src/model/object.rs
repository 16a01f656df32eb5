use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::lexicon::{AttributeLexicon, Category, Color, Shape};
use super::ModelError;

/// Amplitude of the uniform noise added to the one-hot label features.
pub const FEATURE_NOISE: f64 = 0.1;

/// A symbolic visual object: one cell of the color/shape grid plus a synthetic
/// feature vector (three color slots followed by three shape slots).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisualObject {
    pub color: Color,
    pub shape: Shape,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub features: Vec<f64>,
}

impl VisualObject {
    /// Object with noiseless one-hot features.
    pub fn new(color: Color, shape: Shape) -> Self {
        let mut features = vec![0.0; 6];
        features[color.index()] = 1.0;
        features[3 + shape.index()] = 1.0;
        Self { color, shape, features }
    }

    /// One-hot features with uniform noise in `[-FEATURE_NOISE, FEATURE_NOISE]`,
    /// clamped to the unit range.
    pub fn with_noise<R: Rng + ?Sized>(color: Color, shape: Shape, rng: &mut R) -> Self {
        let mut obj = Self::new(color, shape);
        for f in obj.features.iter_mut() {
            *f = (*f + rng.gen_range(-FEATURE_NOISE..=FEATURE_NOISE)).clamp(0.0, 1.0);
        }
        obj
    }

    /// Ground label index of a category.
    pub fn label(&self, category: Category) -> usize {
        match category {
            Category::Color => self.color.index(),
            Category::Shape => self.shape.index(),
        }
    }

    /// Label index indicated by the features (argmax over the category's
    /// slots). Falls back to the ground label when features are absent.
    pub fn feature_label(&self, category: Category) -> usize {
        if self.features.len() < 6 {
            return self.label(category);
        }
        let block = match category {
            Category::Color => &self.features[0..3],
            Category::Shape => &self.features[3..6],
        };
        let mut best = 0;
        for (i, v) in block.iter().enumerate() {
            if *v > block[best] {
                best = i;
            }
        }
        best
    }

    /// The invented word naming this object's attribute.
    pub fn word<'a>(&self, lexicon: &'a AttributeLexicon, category: Category) -> &'a str {
        lexicon.word(category, self.label(category))
    }

    pub fn cell(&self) -> (Color, Shape) {
        (self.color, self.shape)
    }
}

/// All nine grid cells in row-major order.
pub fn grid() -> Vec<(Color, Shape)> {
    Color::ALL
        .iter()
        .flat_map(|c| Shape::ALL.iter().map(move |s| (*c, *s)))
        .collect()
}

/// Deterministic object sequence: consecutive shuffled passes over the grid,
/// so every cell appears once before any repeats.
pub fn make_object_sequence(
    lexicon: &AttributeLexicon,
    count: usize,
    seed: u64,
) -> Result<Vec<VisualObject>, ModelError> {
    if count == 0 {
        return Err(ModelError::EmptyRequest);
    }
    lexicon.validate().map_err(ModelError::InvalidLexicon)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut cells = grid();
        cells.shuffle(&mut rng);
        for (c, s) in cells {
            if out.len() == count {
                break;
            }
            out.push(VisualObject::with_noise(c, s, &mut rng));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn cell_counts(objs: &[VisualObject]) -> HashMap<(Color, Shape), usize> {
        let mut m = HashMap::new();
        for o in objs {
            *m.entry(o.cell()).or_insert(0) += 1;
        }
        m
    }

    #[test]
    fn nine_objects_cover_grid_once() {
        let objs = make_object_sequence(&AttributeLexicon::default(), 9, 7).unwrap();
        assert_eq!(objs.len(), 9);
        let counts = cell_counts(&objs);
        assert_eq!(counts.len(), 9);
        assert!(counts.values().all(|&n| n == 1));
    }

    #[test]
    fn eighteen_objects_cover_grid_twice() {
        let objs = make_object_sequence(&AttributeLexicon::default(), 18, 3).unwrap();
        let counts = cell_counts(&objs);
        assert_eq!(counts.len(), 9);
        assert!(counts.values().all(|&n| n == 2));
        // first pass is complete before the second starts
        assert_eq!(cell_counts(&objs[..9]).len(), 9);
    }

    #[test]
    fn zero_count_rejected() {
        let err = make_object_sequence(&AttributeLexicon::default(), 0, 1).unwrap_err();
        assert_eq!(err, ModelError::EmptyRequest);
    }

    #[test]
    fn invalid_lexicon_rejected() {
        let mut lex = AttributeLexicon::default();
        lex.color.remove(&Color::Red);
        assert!(matches!(
            make_object_sequence(&lex, 9, 1),
            Err(ModelError::InvalidLexicon(_))
        ));
    }

    #[test]
    fn deterministic_per_seed_and_features_in_unit_range() {
        let lex = AttributeLexicon::default();
        let a = make_object_sequence(&lex, 27, 11).unwrap();
        let b = make_object_sequence(&lex, 27, 11).unwrap();
        assert_eq!(a, b);
        for o in &a {
            assert!(o.features.iter().all(|f| (0.0..=1.0).contains(f)));
            assert_eq!(o.feature_label(Category::Color), o.color.index());
            assert_eq!(o.feature_label(Category::Shape), o.shape.index());
        }
    }
}
