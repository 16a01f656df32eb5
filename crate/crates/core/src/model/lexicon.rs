//! Invented attribute vocabulary for the 3 x 3 color/shape grid.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ModelError;

/// Ground color labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Red,
    Green,
    Blue,
}

/// Ground shape labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Square,
    Circle,
    Triangle,
}

impl Color {
    pub const ALL: [Color; 3] = [Color::Red, Color::Green, Color::Blue];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Color::Red => "red",
            Color::Green => "green",
            Color::Blue => "blue",
        }
    }
}

impl Shape {
    pub const ALL: [Shape; 3] = [Shape::Square, Shape::Circle, Shape::Triangle];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Shape::Square => "square",
            Shape::Circle => "circle",
            Shape::Triangle => "triangle",
        }
    }
}

/// An attribute dimension of a visual object.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Color,
    Shape,
}

impl Category {
    pub const ALL: [Category; 2] = [Category::Color, Category::Shape];

    /// Number of ground labels per category.
    pub const LABELS: usize = 3;

    pub fn name(self) -> &'static str {
        match self {
            Category::Color => "color",
            Category::Shape => "shape",
        }
    }

    pub fn other(self) -> Category {
        match self {
            Category::Color => Category::Shape,
            Category::Shape => Category::Color,
        }
    }

    pub fn label_name(self, index: usize) -> &'static str {
        match self {
            Category::Color => Color::ALL[index].name(),
            Category::Shape => Shape::ALL[index].name(),
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Mapping from ground labels to invented words, one table per category.
///
/// The stock lexicon uses the three attested words (`sako` = red,
/// `suzuli` = green, `burchak` = square) and fills the remaining cells with
/// made-up placeholders.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeLexicon {
    pub color: BTreeMap<Color, String>,
    pub shape: BTreeMap<Shape, String>,
}

impl Default for AttributeLexicon {
    fn default() -> Self {
        let color = [(Color::Red, "sako"), (Color::Green, "suzuli"), (Color::Blue, "tivo")];
        let shape = [
            (Shape::Square, "burchak"),
            (Shape::Circle, "wakaki"),
            (Shape::Triangle, "aylana"),
        ];
        Self {
            color: color.iter().map(|(k, v)| (*k, v.to_string())).collect(),
            shape: shape.iter().map(|(k, v)| (*k, v.to_string())).collect(),
        }
    }
}

/// A word usable inside canonical act strings: lowercase ASCII letters,
/// digits, `_` or `-`.
pub fn is_valid_word(word: &str) -> bool {
    !word.is_empty()
        && word
            .chars()
            .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_' || c == '-')
}

impl AttributeLexicon {
    /// Collects every invariant violation instead of stopping at the first.
    pub fn validate(&self) -> Result<(), Vec<ModelError>> {
        let mut errors = Vec::new();
        for c in Color::ALL {
            if !self.color.contains_key(&c) {
                errors.push(ModelError::MissingEntry {
                    category: Category::Color,
                    label: c.name().to_string(),
                });
            }
        }
        for s in Shape::ALL {
            if !self.shape.contains_key(&s) {
                errors.push(ModelError::MissingEntry {
                    category: Category::Shape,
                    label: s.name().to_string(),
                });
            }
        }
        let mut seen = BTreeSet::new();
        let mut dup = BTreeSet::new();
        for w in self.color.values().chain(self.shape.values()) {
            if !is_valid_word(w) {
                errors.push(ModelError::InvalidWord(w.clone()));
            }
            if !seen.insert(w.as_str()) && dup.insert(w.as_str()) {
                errors.push(ModelError::DuplicateWord(w.clone()));
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(errors)
        }
    }

    /// Word for the label at `index` of `category`. Panics on an unvalidated
    /// lexicon with a missing entry.
    pub fn word(&self, category: Category, index: usize) -> &str {
        match category {
            Category::Color => &self.color[&Color::ALL[index]],
            Category::Shape => &self.shape[&Shape::ALL[index]],
        }
    }

    pub fn color_word(&self, color: Color) -> &str {
        &self.color[&color]
    }

    pub fn shape_word(&self, shape: Shape) -> &str {
        &self.shape[&shape]
    }

    /// Reverse lookup: which category and label a word names.
    pub fn lookup(&self, word: &str) -> Option<(Category, usize)> {
        if let Some((c, _)) = self.color.iter().find(|(_, w)| w.as_str() == word) {
            return Some((Category::Color, c.index()));
        }
        self.shape
            .iter()
            .find(|(_, w)| w.as_str() == word)
            .map(|(s, _)| (Category::Shape, s.index()))
    }

    /// All words of a category in label order.
    pub fn words(&self, category: Category) -> Vec<&str> {
        match category {
            Category::Color => self.color.values().map(String::as_str).collect(),
            Category::Shape => self.shape.values().map(String::as_str).collect(),
        }
    }
}
