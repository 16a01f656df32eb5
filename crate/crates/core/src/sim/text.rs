//! Delexicalized surface forms shared by training, prediction and
//! realization.

use crate::corpus::{is_punct_token, tokenize};
use crate::model::{AttributeLexicon, Category};

/// Start-of-context padding token.
pub const START: &str = "<s>";
/// End-of-utterance token at the word level.
pub const END: &str = "</s>";

pub fn slot(category: Category) -> &'static str {
    match category {
        Category::Color => "{color}",
        Category::Shape => "{shape}",
    }
}

/// Replace every invented word in `text` with its category slot, keeping
/// everything else as typed (trimmed).
pub fn delexicalize_text(text: &str, lexicon: &AttributeLexicon) -> String {
    let mut out = String::with_capacity(text.len());
    let mut word = String::new();
    let flush = |word: &mut String, out: &mut String| {
        match lexicon.lookup(&word.to_lowercase()) {
            Some((k, _)) => out.push_str(slot(k)),
            None => out.push_str(word),
        }
        word.clear();
    };
    for c in text.trim().chars() {
        if c.is_alphanumeric() || c == '_' || c == '-' {
            word.push(c);
        } else {
            flush(&mut word, &mut out);
            out.push(c);
        }
    }
    flush(&mut word, &mut out);
    out
}

/// Tokens of `text` with invented words replaced by slots.
pub fn delexicalized_tokens(text: &str, lexicon: &AttributeLexicon) -> Vec<String> {
    tokenize(text)
        .into_iter()
        .map(|t| match lexicon.lookup(&t) {
            Some((k, _)) => slot(k).to_string(),
            None => t,
        })
        .collect()
}

/// Join tokens back into text: punctuation attaches to the previous token.
pub fn detokenize(tokens: &[String]) -> String {
    let mut out = String::new();
    for t in tokens {
        if !out.is_empty() && !(is_punct_token(t) && t != "...") {
            out.push(' ');
        }
        out.push_str(t);
    }
    out
}

/// Fill `{color}` / `{shape}` slots. `None` when a slot has no value.
pub fn fill_slots(template: &str, color: Option<&str>, shape: Option<&str>) -> Option<String> {
    let mut out = template.to_string();
    for (marker, value) in [("{color}", color), ("{shape}", shape)] {
        if out.contains(marker) {
            out = out.replace(marker, value?);
        }
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delexicalizes_words_only() {
        let lex = AttributeLexicon::default();
        assert_eq!(delexicalize_text(" No, it's Sako!", &lex), "No, it's {color}!");
        assert_eq!(delexicalize_text("sakos burchak", &lex), "sakos {shape}");
        assert_eq!(delexicalized_tokens("is it sako?", &lex), ["is", "it", "{color}", "?"]);
    }

    #[test]
    fn detokenize_attaches_punctuation() {
        let t: Vec<String> = ["no", ",", "it's", "{color}", "."]
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(detokenize(&t), "no, it's {color}.");
    }

    #[test]
    fn fills_or_reports_missing() {
        assert_eq!(
            fill_slots("a {color} {shape}", Some("sako"), Some("burchak")).unwrap(),
            "a sako burchak"
        );
        assert_eq!(fill_slots("yes", None, None).unwrap(), "yes");
        assert!(fill_slots("it's {shape}", Some("sako"), None).is_none());
    }
}
