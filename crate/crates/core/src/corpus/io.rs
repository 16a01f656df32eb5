//! Reading and writing logs and corpus files.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::model::{CharEvent, Corpus};

use super::CorpusError;

/// Parse a JSON-lines keystroke log. Blank lines are skipped.
pub fn parse_log(reader: impl BufRead) -> Result<Vec<CharEvent>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| CorpusError::Parse { line: i + 1, source })?);
    }
    Ok(out)
}

pub fn read_log(path: &Path) -> Result<Vec<CharEvent>, CorpusError> {
    parse_log(BufReader::new(fs::File::open(path)?))
}

/// One JSON object per line, `\n`-terminated.
pub fn log_to_bytes(events: &[CharEvent]) -> Vec<u8> {
    let mut out = Vec::with_capacity(events.len() * 96);
    for e in events {
        serde_json::to_writer(&mut out, e).expect("CharEvent serializes");
        out.push(b'\n');
    }
    out
}

pub fn write_log(path: &Path, events: &[CharEvent]) -> Result<(), CorpusError> {
    fs::File::create(path)?.write_all(&log_to_bytes(events))?;
    Ok(())
}

pub fn read_corpus(path: &Path) -> Result<Corpus, CorpusError> {
    Ok(serde_json::from_slice(&fs::read(path)?)?)
}

pub fn corpus_to_bytes(corpus: &Corpus) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(corpus).expect("corpus serializes");
    v.push(b'\n');
    v
}

pub fn write_corpus(path: &Path, corpus: &Corpus) -> Result<(), CorpusError> {
    fs::write(path, corpus_to_bytes(corpus))?;
    Ok(())
}
