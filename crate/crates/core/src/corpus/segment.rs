use std::collections::HashMap;

use crate::model::{CharEvent, Dialogue, Role, Turn, VisualObject};

use super::CorpusError;

/// Default maximum inter-character delay within a turn, in milliseconds.
pub const DEFAULT_GAP_MS: u64 = 1100;

/// Dialogue id for a session's object slot.
pub fn dialogue_id(session: &str, object_index: usize) -> String {
    format!("{session}/{object_index}")
}

struct OpenTurn {
    speaker: Role,
    start_ms: u64,
    last_ms: u64,
    text: String,
    seqs: Vec<u64>,
}

impl OpenTurn {
    fn start(ev: &CharEvent) -> Self {
        Self {
            speaker: ev.sender,
            start_ms: ev.server_ts,
            last_ms: ev.server_ts,
            text: ev.ch.to_string(),
            seqs: vec![ev.seq],
        }
    }

    fn close(self) -> Turn {
        let mut t = Turn::new(0, self.speaker, self.start_ms, self.last_ms, self.text);
        t.events = self.seqs;
        t
    }
}

/// Split a keystroke log into turns, grouped into one dialogue per
/// `(session, object_index)`.
///
/// A speaker's turn continues while the delay since that speaker's previous
/// character is at most `gap_ms`; the other participant typing in between
/// does not end it, so turns of different speakers may overlap. Dialogues
/// keep first-appearance order; turns are ordered by start time and then by
/// first sequence number. `objects[i]` is attached to object slot `i` when
/// present.
pub fn segment_turns(
    events: &[CharEvent],
    gap_ms: u64,
    objects: &[VisualObject],
) -> Result<Vec<Dialogue>, CorpusError> {
    let mut last_seq: HashMap<&str, u64> = HashMap::new();
    for ev in events {
        if let Some(prev) = last_seq.insert(ev.session_id.as_str(), ev.seq) {
            if ev.seq <= prev {
                return Err(CorpusError::Unordered {
                    session: ev.session_id.clone(),
                    seq: ev.seq,
                    previous: prev,
                });
            }
        }
    }

    let mut order: Vec<(String, usize)> = Vec::new();
    let mut groups: HashMap<(String, usize), Vec<&CharEvent>> = HashMap::new();
    for ev in events {
        let key = (ev.session_id.clone(), ev.object_index);
        groups
            .entry(key.clone())
            .or_insert_with(|| {
                order.push(key);
                Vec::new()
            })
            .push(ev);
    }

    let mut dialogues = Vec::with_capacity(order.len());
    for key in order {
        let evs = &groups[&key];
        let mut open: [Option<OpenTurn>; 2] = [None, None];
        let mut done = Vec::new();
        for ev in evs {
            let slot = &mut open[ev.sender as usize];
            match slot {
                Some(t) if ev.server_ts.saturating_sub(t.last_ms) <= gap_ms => {
                    t.last_ms = ev.server_ts;
                    t.text.push(ev.ch);
                    t.seqs.push(ev.seq);
                }
                _ => {
                    if let Some(t) = slot.replace(OpenTurn::start(ev)) {
                        done.push(t.close());
                    }
                }
            }
        }
        done.extend(open.into_iter().flatten().map(OpenTurn::close));
        done.sort_by_key(|t| (t.start_ms, t.events[0]));
        for (i, t) in done.iter_mut().enumerate() {
            t.id = i as u32;
        }
        let mut d = Dialogue::new(dialogue_id(&key.0, key.1), objects.get(key.1).cloned());
        d.turns = done;
        dialogues.push(d);
    }
    Ok(dialogues)
}
