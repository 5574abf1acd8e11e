use std::collections::{BTreeMap, HashMap};

use super::NoiseError;
use crate::corpus::CorpusRecord;

pub const PAD: u32 = 0;
pub const BOS: u32 = 1;
pub const EOS: u32 = 2;
pub const UNK: u32 = 3;
pub const MASK: u32 = 4;
pub const NUM_SPECIALS: u32 = 5;

const SPECIAL_NAMES: [&str; NUM_SPECIALS as usize] = ["<pad>", "<bos>", "<eos>", "<unk>", "<mask>"];

/// Character-level vocabulary with five reserved special ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tokenizer {
    vocab: HashMap<char, u32>,
    chars: Vec<char>,
}

impl Tokenizer {
    /// Ids are assigned by descending corpus frequency, ties broken by code
    /// point.
    pub fn build(corpus: &[CorpusRecord]) -> Result<Self, NoiseError> {
        if corpus.is_empty() {
            return Err(NoiseError::EmptyCorpus);
        }
        let mut freq: BTreeMap<char, usize> = BTreeMap::new();
        for r in corpus {
            for c in r.source.chars().chain(r.target.iter().flat_map(|t| t.chars())) {
                *freq.entry(c).or_default() += 1;
            }
        }
        let mut by_freq: Vec<(char, usize)> = freq.into_iter().collect();
        by_freq.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        Ok(Self::from_chars(by_freq.into_iter().map(|(c, _)| c).collect()))
    }

    fn from_chars(chars: Vec<char>) -> Self {
        let vocab = chars
            .iter()
            .enumerate()
            .map(|(i, &c)| (c, i as u32 + NUM_SPECIALS))
            .collect();
        Self { vocab, chars }
    }

    pub fn size(&self) -> usize {
        self.chars.len() + NUM_SPECIALS as usize
    }

    pub fn is_special(id: u32) -> bool {
        id < NUM_SPECIALS
    }

    pub fn id(&self, c: char) -> u32 {
        self.vocab.get(&c).copied().unwrap_or(UNK)
    }

    pub fn encode(&self, text: &str) -> Vec<u32> {
        text.chars().map(|c| self.id(c)).collect()
    }

    /// `[BOS] text [EOS]`.
    pub fn encode_target(&self, text: &str) -> Vec<u32> {
        let mut ids = Vec::with_capacity(text.len() + 2);
        ids.push(BOS);
        ids.extend(text.chars().map(|c| self.id(c)));
        ids.push(EOS);
        ids
    }

    pub fn token(&self, id: u32) -> Option<char> {
        id.checked_sub(NUM_SPECIALS)
            .and_then(|i| self.chars.get(i as usize).copied())
    }

    /// Drops special and out-of-range ids.
    pub fn decode(&self, ids: &[u32]) -> String {
        ids.iter().filter_map(|&id| self.token(id)).collect()
    }

    /// `token<TAB>id` lines, specials first.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (i, name) in SPECIAL_NAMES.iter().enumerate() {
            out.push_str(&format!("{name}\t{i}\n"));
        }
        for (i, c) in self.chars.iter().enumerate() {
            out.push_str(&format!("{c}\t{}\n", i as u32 + NUM_SPECIALS));
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self, NoiseError> {
        let mut chars = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let err = |msg: String| NoiseError::Parse { line: i + 1, msg };
            let (tok, id) = line
                .rsplit_once('\t')
                .ok_or_else(|| err("expected token<TAB>id".into()))?;
            let id: u32 = id.parse().map_err(|_| err(format!("bad id {id:?}")))?;
            if id as usize != i {
                return Err(err(format!("ids must be consecutive, expected {i}")));
            }
            if id < NUM_SPECIALS {
                if tok != SPECIAL_NAMES[id as usize] {
                    return Err(err(format!("expected special {}", SPECIAL_NAMES[id as usize])));
                }
                continue;
            }
            let mut cs = tok.chars();
            match (cs.next(), cs.next()) {
                (Some(c), None) => chars.push(c),
                _ => return Err(err(format!("token {tok:?} is not one character"))),
            }
        }
        Ok(Self::from_chars(chars))
    }
}
