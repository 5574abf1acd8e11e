use std::collections::HashMap;
use std::path::Path;

use super::CorpusError;

const BUNDLED_TRAD2SIMP: &str = include_str!("../../data/trad2simp.tsv");
const BUNDLED_PUNCT: &str = include_str!("../../data/punct.tsv");

/// A single-character substitution table.
///
/// No entry maps a character to itself and every value is a fixed point
/// (never itself a key), so applying the table is idempotent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharMapTable {
    name: String,
    entries: HashMap<char, char>,
}

impl CharMapTable {
    pub fn new(
        name: impl Into<String>,
        pairs: impl IntoIterator<Item = (char, char)>,
    ) -> Result<Self, CorpusError> {
        let name = name.into();
        let invalid = |msg: String| CorpusError::InvalidTable {
            table: name.clone(),
            msg,
        };
        let mut entries = HashMap::new();
        for (from, to) in pairs {
            if from == to {
                return Err(invalid(format!("{from:?} maps to itself")));
            }
            if let Some(prev) = entries.insert(from, to) {
                if prev != to {
                    return Err(invalid(format!("{from:?} maps to both {prev:?} and {to:?}")));
                }
            }
        }
        if let Some((k, v)) = entries.iter().find(|(_, v)| entries.contains_key(v)) {
            return Err(invalid(format!(
                "{k:?} maps to {v:?}, which is itself remapped"
            )));
        }
        Ok(Self { name, entries })
    }

    pub fn empty(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            entries: HashMap::new(),
        }
    }

    /// Parse a two-column tab-separated table. Blank lines and lines starting
    /// with `#` are skipped.
    pub fn parse_tsv(name: impl Into<String>, text: &str) -> Result<Self, CorpusError> {
        let mut pairs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |msg: &str| CorpusError::Parse {
                line: i + 1,
                msg: msg.to_string(),
            };
            let (a, b) = line
                .split_once('\t')
                .ok_or_else(|| parse_err("expected two tab-separated columns"))?;
            pairs.push((single_char(a).ok_or_else(|| parse_err("first column must be one character"))?,
                        single_char(b).ok_or_else(|| parse_err("second column must be one character"))?));
        }
        Self::new(name, pairs)
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let text = std::fs::read_to_string(path).map_err(|e| CorpusError::Io {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
        Self::parse_tsv(path.display().to_string(), &text)
    }

    /// Traditional to simplified characters shipped with the crate.
    pub fn bundled_trad2simp() -> Self {
        Self::parse_tsv("trad2simp", BUNDLED_TRAD2SIMP).expect("bundled table is valid")
    }

    /// Punctuation unification shipped with the crate (`「` to `“` and so on).
    pub fn bundled_punct() -> Self {
        Self::parse_tsv("punct", BUNDLED_PUNCT).expect("bundled table is valid")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, c: char) -> Option<char> {
        self.entries.get(&c).copied()
    }

    pub fn apply(&self, c: char) -> char {
        self.get(c).unwrap_or(c)
    }

    pub fn apply_str(&self, s: &str) -> String {
        s.chars().map(|c| self.apply(c)).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (char, char)> + '_ {
        self.entries.iter().map(|(&k, &v)| (k, v))
    }

    pub fn values(&self) -> impl Iterator<Item = char> + '_ {
        self.entries.values().copied()
    }
}

fn single_char(s: &str) -> Option<char> {
    let mut it = s.chars();
    match (it.next(), it.next()) {
        (Some(c), None) => Some(c),
        _ => None,
    }
}
