//! Dialogue acts and their canonical text form.
//!
//! Grammar (ASCII, no spaces):
//!
//! ```text
//! sequence := act ("+" act)*
//! act      := type "(" [arg ("," arg)*] ")"
//! arg      := category | category "=" word | "word=" word | "pol=" ("pos"|"neg")
//! category := "color" | "shape" | "both"
//! type     := inform | ack | reject | ask | focus | clarify | check | repeat | offer_help
//! ```
//!
//! Arguments are emitted in the order category/word, then polarity.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use super::lexicon::{is_valid_word, AttributeLexicon, Category};
use super::object::VisualObject;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ActParseError {
    #[error("malformed act `{0}`")]
    Malformed(String),
    #[error("unknown act type `{0}`")]
    UnknownType(String),
    #[error("bad argument `{0}`")]
    BadArgument(String),
    #[error("duplicate argument in `{0}`")]
    DuplicateArgument(String),
    #[error("invalid act `{0}`: {1}")]
    Invalid(String, &'static str),
}

/// Closed nine-way act inventory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DialogueActType {
    Inform,
    Acknowledgment,
    Rejection,
    Asking,
    Focus,
    Clarification,
    Checking,
    Repetition,
    OfferHelp,
}

impl DialogueActType {
    pub const ALL: [DialogueActType; 9] = [
        DialogueActType::Inform,
        DialogueActType::Acknowledgment,
        DialogueActType::Rejection,
        DialogueActType::Asking,
        DialogueActType::Focus,
        DialogueActType::Clarification,
        DialogueActType::Checking,
        DialogueActType::Repetition,
        DialogueActType::OfferHelp,
    ];

    pub fn canonical(self) -> &'static str {
        match self {
            DialogueActType::Inform => "inform",
            DialogueActType::Acknowledgment => "ack",
            DialogueActType::Rejection => "reject",
            DialogueActType::Asking => "ask",
            DialogueActType::Focus => "focus",
            DialogueActType::Clarification => "clarify",
            DialogueActType::Checking => "check",
            DialogueActType::Repetition => "repeat",
            DialogueActType::OfferHelp => "offer_help",
        }
    }

    pub fn from_canonical(s: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|t| t.canonical() == s)
    }
}

/// Category argument of an act.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActCategory {
    Color,
    Shape,
    Both,
}

impl ActCategory {
    pub fn name(self) -> &'static str {
        match self {
            ActCategory::Color => "color",
            ActCategory::Shape => "shape",
            ActCategory::Both => "both",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "color" => Some(ActCategory::Color),
            "shape" => Some(ActCategory::Shape),
            "both" => Some(ActCategory::Both),
            _ => None,
        }
    }

    /// The single attribute category, if this is not `both`.
    pub fn single(self) -> Option<Category> {
        match self {
            ActCategory::Color => Some(Category::Color),
            ActCategory::Shape => Some(Category::Shape),
            ActCategory::Both => None,
        }
    }

    pub fn covers(self, category: Category) -> bool {
        match self {
            ActCategory::Both => true,
            other => other.single() == Some(category),
        }
    }
}

impl From<Category> for ActCategory {
    fn from(c: Category) -> Self {
        match c {
            Category::Color => ActCategory::Color,
            Category::Shape => ActCategory::Shape,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Pos,
    Neg,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DialogueAct {
    pub act_type: DialogueActType,
    pub category: Option<ActCategory>,
    pub word: Option<String>,
    pub polarity: Option<Polarity>,
}

impl DialogueAct {
    pub fn new(act_type: DialogueActType) -> Self {
        Self {
            act_type,
            category: None,
            word: None,
            polarity: None,
        }
    }

    pub fn with_category(mut self, category: impl Into<ActCategory>) -> Self {
        self.category = Some(category.into());
        self
    }

    pub fn with_word(mut self, word: impl Into<String>) -> Self {
        self.word = Some(word.into());
        self
    }

    pub fn with_polarity(mut self, polarity: Polarity) -> Self {
        self.polarity = Some(polarity);
        self
    }

    pub fn inform(category: Category, word: impl Into<String>) -> Self {
        Self::new(DialogueActType::Inform)
            .with_category(category)
            .with_word(word)
    }

    pub fn ack() -> Self {
        Self::new(DialogueActType::Acknowledgment)
    }

    pub fn reject() -> Self {
        Self::new(DialogueActType::Rejection)
    }

    pub fn ask(category: impl Into<ActCategory>) -> Self {
        Self::new(DialogueActType::Asking).with_category(category)
    }

    pub fn validate(&self) -> Result<(), &'static str> {
        if let Some(w) = &self.word {
            if !is_valid_word(w) {
                return Err("word must be lowercase ascii alphanumeric");
            }
        }
        match self.act_type {
            DialogueActType::Inform if self.word.is_none() => Err("inform requires a word"),
            DialogueActType::Asking if self.word.is_none() && self.category.is_none() => {
                Err("asking requires a category or a word")
            }
            _ => Ok(()),
        }
    }

    /// Copy without the invented word.
    pub fn delexicalized(&self) -> Self {
        Self {
            word: None,
            ..self.clone()
        }
    }
}

impl fmt::Display for DialogueAct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.act_type.canonical())?;
        let mut first = true;
        let mut sep = |f: &mut fmt::Formatter<'_>| -> fmt::Result {
            if !first {
                f.write_str(",")?;
            }
            first = false;
            Ok(())
        };
        match (&self.category, &self.word) {
            (Some(c), Some(w)) => {
                sep(f)?;
                write!(f, "{}={}", c.name(), w)?;
            }
            (Some(c), None) => {
                sep(f)?;
                f.write_str(c.name())?;
            }
            (None, Some(w)) => {
                sep(f)?;
                write!(f, "word={w}")?;
            }
            (None, None) => {}
        }
        if let Some(p) = self.polarity {
            sep(f)?;
            f.write_str(match p {
                Polarity::Pos => "pol=pos",
                Polarity::Neg => "pol=neg",
            })?;
        }
        f.write_str(")")
    }
}

impl FromStr for DialogueAct {
    type Err = ActParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_act(s, true)
    }
}

impl DialogueAct {
    /// Parse an act that may be delexicalized (`inform(color)`), i.e. skip the
    /// word-presence invariants while still checking the syntax.
    pub fn parse_abstract(s: &str) -> Result<Self, ActParseError> {
        parse_act(s, false)
    }
}

fn parse_act(s: &str, strict: bool) -> Result<DialogueAct, ActParseError> {
    let malformed = || ActParseError::Malformed(s.to_string());
    let open = s.find('(').ok_or_else(malformed)?;
    if !s.ends_with(')') {
        return Err(malformed());
    }
    let name = &s[..open];
    let inner = &s[open + 1..s.len() - 1];
    if inner.contains('(') || inner.contains(')') {
        return Err(malformed());
    }
    let act_type = DialogueActType::from_canonical(name).ok_or_else(|| ActParseError::UnknownType(name.to_string()))?;
    let mut act = DialogueAct::new(act_type);
    if !inner.is_empty() {
        for arg in inner.split(',') {
            let dup = || ActParseError::DuplicateArgument(s.to_string());
            match arg.split_once('=') {
                None => {
                    let c = ActCategory::parse(arg).ok_or_else(|| ActParseError::BadArgument(arg.to_string()))?;
                    if act.category.replace(c).is_some() {
                        return Err(dup());
                    }
                }
                Some(("pol", v)) => {
                    let p = match v {
                        "pos" => Polarity::Pos,
                        "neg" => Polarity::Neg,
                        _ => return Err(ActParseError::BadArgument(arg.to_string())),
                    };
                    if act.polarity.replace(p).is_some() {
                        return Err(dup());
                    }
                }
                Some(("word", w)) => {
                    if act.word.replace(w.to_string()).is_some() {
                        return Err(dup());
                    }
                }
                Some((k, w)) => {
                    let c = ActCategory::parse(k).ok_or_else(|| ActParseError::BadArgument(arg.to_string()))?;
                    if act.category.replace(c).is_some() || act.word.replace(w.to_string()).is_some() {
                        return Err(dup());
                    }
                }
            }
        }
    }
    if strict {
        act.validate()
            .map_err(|why| ActParseError::Invalid(s.to_string(), why))?;
    } else if act.word.as_deref().is_some_and(|w| !is_valid_word(w)) {
        return Err(ActParseError::BadArgument(s.to_string()));
    }
    // reject non-canonical spellings such as a reordered argument list
    if act.to_string() != s {
        return Err(malformed());
    }
    Ok(act)
}

impl Serialize for DialogueAct {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DialogueAct {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The ordered acts performed in one turn.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActSequence(pub Vec<DialogueAct>);

impl ActSequence {
    pub fn new(acts: Vec<DialogueAct>) -> Self {
        Self(acts)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, DialogueAct> {
        self.0.iter()
    }

    pub fn contains_type(&self, t: DialogueActType) -> bool {
        self.0.iter().any(|a| a.act_type == t)
    }

    pub fn delexicalized(&self) -> Self {
        Self(self.0.iter().map(DialogueAct::delexicalized).collect())
    }

    /// Fill the word slot of every single-category `inform` with the
    /// object's invented word. Other acts are left as they are.
    pub fn instantiate(&self, object: &VisualObject, lexicon: &AttributeLexicon) -> Self {
        Self(
            self.0
                .iter()
                .map(|a| {
                    let mut a = a.clone();
                    if a.act_type == DialogueActType::Inform && a.word.is_none() {
                        if let Some(c) = a.category.and_then(ActCategory::single) {
                            a.word = Some(object.word(lexicon, c).to_string());
                        }
                    }
                    a
                })
                .collect(),
        )
    }
}

impl fmt::Display for ActSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("+")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

impl FromStr for ActSequence {
    type Err = ActParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.is_empty() {
            return Ok(Self::default());
        }
        s.split('+').map(str::parse).collect::<Result<Vec<_>, _>>().map(Self)
    }
}

impl ActSequence {
    /// Parse a possibly delexicalized sequence (see [`DialogueAct::parse_abstract`]).
    pub fn parse_abstract(s: &str) -> Result<Self, ActParseError> {
        if s.is_empty() {
            return Ok(Self::default());
        }
        s.split('+')
            .map(DialogueAct::parse_abstract)
            .collect::<Result<Vec<_>, _>>()
            .map(Self)
    }
}

impl From<Vec<DialogueAct>> for ActSequence {
    fn from(v: Vec<DialogueAct>) -> Self {
        Self(v)
    }
}

/// Canonical text form of an act, e.g. `inform(color=sako)`.
pub fn canonical_act_string(act: &DialogueAct) -> String {
    act.to_string()
}
