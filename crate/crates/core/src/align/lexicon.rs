use std::collections::HashSet;
use std::path::Path;

use super::AlignError;

const BUNDLED_LEXICON: &str = include_str!("../../data/lexicon.txt");

/// Modern-Chinese word list for forward maximum matching.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    words: HashSet<String>,
    max_word_len: usize,
}

impl Lexicon {
    pub fn new<I, S>(words: I) -> Result<Self, AlignError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut set = HashSet::new();
        let mut max_word_len = 0;
        for (i, w) in words.into_iter().enumerate() {
            let w: String = w.into();
            if w.is_empty() {
                return Err(AlignError::EmptyWord { line: i + 1 });
            }
            max_word_len = max_word_len.max(w.chars().count());
            set.insert(w);
        }
        Ok(Self {
            words: set,
            max_word_len,
        })
    }

    /// One word per line; surrounding whitespace and blank lines are ignored.
    pub fn parse(text: &str) -> Self {
        Self::new(text.lines().map(str::trim).filter(|l| !l.is_empty()))
            .expect("blank lines filtered")
    }

    pub fn load(path: &Path) -> Result<Self, AlignError> {
        let text = std::fs::read_to_string(path).map_err(|e| AlignError::Io {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
        Ok(Self::parse(&text))
    }

    /// The general-purpose word list shipped with the crate.
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_LEXICON)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn max_word_len(&self) -> usize {
        self.max_word_len
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}
