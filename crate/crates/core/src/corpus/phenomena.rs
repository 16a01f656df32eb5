//! Heuristic detectors for incremental dialogue phenomena. These are
//! assistive tags, not a substitute for manual annotation.

use std::collections::BTreeSet;

use crate::model::{Dialogue, PhenomenonTag, Turn};

use super::tokenize::{is_punct_token, tokenize};

pub const FILLERS: &[&str] = &["urm", "err", "uhh", "um", "uh", "..."];

/// Single-token self-correction markers; `i mean` is handled separately.
const CORRECTION_MARKERS: &[&str] = &["no", "sorry"];

/// Pairs `(a, b)` with `a < b` of turns by different speakers whose closed
/// `[start_ms, end_ms]` intervals intersect. Touching endpoints count.
pub fn detect_overlaps(dialogue: &Dialogue) -> BTreeSet<(u32, u32)> {
    let mut out = BTreeSet::new();
    let turns = &dialogue.turns;
    for (i, a) in turns.iter().enumerate() {
        for b in &turns[i + 1..] {
            if a.speaker != b.speaker && a.start_ms <= b.end_ms && b.start_ms <= a.end_ms {
                out.insert((a.id.min(b.id), a.id.max(b.id)));
            }
        }
    }
    out
}

/// Tags for one turn given the turn preceding it (either speaker). Overlap is
/// a dialogue-level relation, see [`annotate_phenomena`].
pub fn detect_phenomena(turn: &Turn, previous: Option<&Turn>) -> BTreeSet<PhenomenonTag> {
    let tokens = tokenize(&turn.text);
    let mut tags = BTreeSet::new();
    if tokens.iter().any(|t| FILLERS.contains(&t.as_str())) {
        tags.insert(PhenomenonTag::Filler);
    }
    let content: Vec<&str> = tokens
        .iter()
        .map(String::as_str)
        .filter(|t| !is_punct_token(t) && !FILLERS.contains(t))
        .collect();
    if has_self_correction(&content) {
        tags.insert(PhenomenonTag::SelfCorrection);
    }
    let plain: Vec<&str> = content
        .iter()
        .copied()
        .filter(|t| !CORRECTION_MARKERS.contains(t))
        .collect();
    if has_adjacent_repeat(&plain) {
        tags.insert(PhenomenonTag::SelfRepetition);
    }
    if let Some(prev) = previous {
        if !ends_terminally(&prev.text) && starts_uncapitalized(&turn.text) {
            tags.insert(PhenomenonTag::Continuation);
        }
    }
    tags
}

/// Replace every turn's tags with the detector output plus overlaps.
pub fn annotate_phenomena(dialogue: &mut Dialogue) {
    let overlapping: BTreeSet<u32> = detect_overlaps(dialogue)
        .into_iter()
        .flat_map(|(a, b)| [a, b])
        .collect();
    let mut tags = Vec::with_capacity(dialogue.turns.len());
    for (i, t) in dialogue.turns.iter().enumerate() {
        let prev = i.checked_sub(1).map(|j| &dialogue.turns[j]);
        let mut set = detect_phenomena(t, prev);
        if overlapping.contains(&t.id) {
            set.insert(PhenomenonTag::Overlap);
        }
        tags.push(set);
    }
    for (t, set) in dialogue.turns.iter_mut().zip(tags) {
        t.phenomena = set;
    }
}

/// Some span of `n >= 1` tokens immediately followed by an identical span.
fn has_adjacent_repeat(tokens: &[&str]) -> bool {
    let len = tokens.len();
    (1..=len / 2).any(|n| (0..=len - 2 * n).any(|i| tokens[i..i + n] == tokens[i + n..i + 2 * n]))
}

/// A correction marker preceded by some reparandum and followed by a repair
/// that restarts from a recent token (same word, or a shared prefix of at
/// least two characters with the last token, e.g. `squ ... sorry ... square`).
fn has_self_correction(tokens: &[&str]) -> bool {
    let is_marker =
        |i: usize| CORRECTION_MARKERS.contains(&tokens[i]) || (tokens[i] == "i" && tokens.get(i + 1) == Some(&"mean"));
    let mut i = 0;
    while i < tokens.len() {
        if !is_marker(i) {
            i += 1;
            continue;
        }
        let left = &tokens[..i];
        let mut j = i;
        while j < tokens.len() && is_marker(j) {
            j += if tokens[j] == "i" { 2 } else { 1 };
        }
        if let (Some(first), Some(last)) = (tokens.get(j), left.last()) {
            let recent = &left[left.len().saturating_sub(3)..];
            if recent.contains(first) || common_prefix(first, last) >= 2 {
                return true;
            }
        }
        i = j.max(i + 1);
    }
    false
}

fn common_prefix(a: &str, b: &str) -> usize {
    a.chars().zip(b.chars()).take_while(|(x, y)| x == y).count()
}

fn ends_terminally(text: &str) -> bool {
    let t = text.trim_end();
    if t.ends_with("..") || t.ends_with('…') {
        return false;
    }
    t.ends_with(['.', '?', '!'])
}

fn starts_uncapitalized(text: &str) -> bool {
    text.trim_start().chars().next().is_some_and(|c| !c.is_uppercase())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Role;

    fn turn(id: u32, speaker: Role, start: u64, end: u64, text: &str) -> Turn {
        Turn::new(id, speaker, start, end, text)
    }

    fn tags(text: &str, prev: Option<&str>) -> Vec<PhenomenonTag> {
        let p = prev.map(|p| turn(0, Role::Learner, 0, 0, p));
        detect_phenomena(&turn(1, Role::Tutor, 0, 0, text), p.as_ref())
            .into_iter()
            .collect()
    }

    #[test]
    fn overlap_intervals() {
        let mut d = Dialogue::new("d", None);
        d.turns = vec![
            turn(0, Role::Tutor, 0, 2000, "a"),
            turn(1, Role::Learner, 1500, 2500, "b"),
        ];
        assert_eq!(detect_overlaps(&d).into_iter().collect::<Vec<_>>(), [(0, 1)]);
        d.turns = vec![
            turn(0, Role::Tutor, 0, 1000, "a"),
            turn(1, Role::Learner, 1000, 2000, "b"),
        ];
        assert_eq!(detect_overlaps(&d).len(), 1);
        d.turns = vec![
            turn(0, Role::Tutor, 0, 999, "a"),
            turn(1, Role::Learner, 1000, 2000, "b"),
        ];
        assert!(detect_overlaps(&d).is_empty());
        // same speaker never overlaps itself
        d.turns = vec![
            turn(0, Role::Tutor, 0, 2000, "a"),
            turn(1, Role::Tutor, 1500, 2500, "b"),
        ];
        assert!(detect_overlaps(&d).is_empty());
    }

    #[test]
    fn filler_and_repetition() {
        assert_eq!(
            tags("a sako um... sako wakaki", None),
            [PhenomenonTag::SelfRepetition, PhenomenonTag::Filler]
        );
    }

    #[test]
    fn self_correction_with_filler() {
        assert_eq!(
            tags("this is a sako ... no no ... a suzuli burchak", None),
            [PhenomenonTag::SelfCorrection, PhenomenonTag::Filler]
        );
        assert!(tags("no, it's a squ ... sorry ... a circle.", None).contains(&PhenomenonTag::SelfCorrection));
        assert!(tags("it is red i mean it is blue", None).contains(&PhenomenonTag::SelfCorrection));
    }

    #[test]
    fn leading_no_is_not_self_correction() {
        assert!(tags("no, it's sako", None).is_empty());
    }

    #[test]
    fn plain_turn_after_terminated_turn() {
        assert!(tags("hello", Some("what is this object?")).is_empty());
    }

    #[test]
    fn continuation_after_unterminated_turn() {
        assert_eq!(tags("and?", Some("sako")), [PhenomenonTag::Continuation]);
        assert_eq!(tags("wakaki", Some("it is a ...")), [PhenomenonTag::Continuation]);
        assert!(tags("And?", Some("sako")).is_empty());
    }

    #[test]
    fn phrase_repetition() {
        assert_eq!(tags("is it is it sako?", None), [PhenomenonTag::SelfRepetition]);
    }

    #[test]
    fn annotate_marks_overlaps() {
        let mut d = Dialogue::new("d", None);
        d.turns = vec![
            turn(0, Role::Tutor, 0, 2000, "this color is ... sako."),
            turn(1, Role::Learner, 1500, 2500, "suzuli?"),
            turn(2, Role::Tutor, 4000, 4500, "no, it's sako."),
        ];
        annotate_phenomena(&mut d);
        assert!(d.turns[0].phenomena.contains(&PhenomenonTag::Overlap));
        assert!(d.turns[1].phenomena.contains(&PhenomenonTag::Overlap));
        assert!(!d.turns[2].phenomena.contains(&PhenomenonTag::Overlap));
    }
}
