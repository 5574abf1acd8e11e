//! Reading and writing corpus files.
//!
//! Malformed lines never abort a read: they are collected as
//! [`LineError`]s so the caller can report them and carry on.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::{Category, CorpusError, CorpusRecord, Era};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LineError {
    pub path: String,
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Default)]
pub struct ReadOutcome {
    pub records: Vec<CorpusRecord>,
    pub errors: Vec<LineError>,
}

/// Classification applied to plain-text input, which carries no metadata.
#[derive(Debug, Clone)]
pub struct PlainTextDefaults {
    pub category: Category,
    pub era: Option<Era>,
    pub origin: String,
}

impl Default for PlainTextDefaults {
    fn default() -> Self {
        Self {
            category: Category::Article,
            era: None,
            origin: String::new(),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CorpusError {
    CorpusError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    }
}

pub fn parse_jsonl(label: &str, text: &str) -> ReadOutcome {
    let mut out = ReadOutcome::default();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<CorpusRecord>(line) {
            Ok(r) => out.records.push(r),
            Err(e) => out.errors.push(LineError {
                path: label.to_string(),
                line: i + 1,
                message: e.to_string(),
            }),
        }
    }
    out
}

/// Plain text: one sentence per line, or `ancient<TAB>modern` for pairs.
/// Ids are `<label>:<line>`.
pub fn parse_plain_text(label: &str, text: &str, defaults: &PlainTextDefaults) -> ReadOutcome {
    let mut out = ReadOutcome::default();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (src, tgt) = match line.split_once('\t') {
            Some((s, t)) => (s, Some(t.to_string())),
            None => (line, None),
        };
        match CorpusRecord::new(
            format!("{label}:{}", i + 1),
            src,
            tgt,
            defaults.category,
            defaults.era,
            defaults.origin.clone(),
        ) {
            Ok(r) => out.records.push(r),
            Err(e) => out.errors.push(LineError {
                path: label.to_string(),
                line: i + 1,
                message: e.to_string(),
            }),
        }
    }
    out
}

/// Reads a corpus file, choosing the format by extension (`.jsonl`/`.json`
/// versus anything else).
pub fn read_corpus(path: &Path, defaults: &PlainTextDefaults) -> Result<ReadOutcome, CorpusError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    Ok(read_corpus_text(path, &text, defaults))
}

pub fn read_corpus_text(path: &Path, text: &str, defaults: &PlainTextDefaults) -> ReadOutcome {
    let label = path.display().to_string();
    match path.extension().and_then(|e| e.to_str()) {
        Some("jsonl") | Some("json") => parse_jsonl(&label, text),
        _ => parse_plain_text(&label, text, defaults),
    }
}

pub fn to_jsonl<T: Serialize>(items: &[T]) -> String {
    let mut s = String::new();
    for item in items {
        s.push_str(&serde_json::to_string(item).expect("serialisable"));
        s.push('\n');
    }
    s
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), CorpusError> {
    let mut f = fs::File::create(path).map_err(|e| io_err(path, e))?;
    f.write_all(to_jsonl(items).as_bytes()).map_err(|e| io_err(path, e))
}
