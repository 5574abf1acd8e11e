use std::collections::{HashMap, HashSet};
use std::ops::RangeInclusive;

use super::CharMapTable;

/// Punctuation that always survives cleaning.
pub const ALLOWED_PUNCTUATION: [char; 13] = [
    '，', '。', '、', '；', '：', '？', '！', '“', '”', '‘', '’', '《', '》',
];

/// Code-point ranges accepted as Chinese characters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CjkRanges(Vec<RangeInclusive<u32>>);

impl Default for CjkRanges {
    /// CJK Unified Ideographs plus Extension A.
    fn default() -> Self {
        Self(vec![0x4E00..=0x9FFF, 0x3400..=0x4DBF])
    }
}

impl CjkRanges {
    pub fn new(ranges: Vec<RangeInclusive<u32>>) -> Self {
        Self(ranges)
    }

    pub fn contains(&self, c: char) -> bool {
        let cp = c as u32;
        self.0.iter().any(|r| r.contains(&cp))
    }
}

/// Applies the three cleaning rules: traditional to simplified conversion,
/// punctuation unification, then removal of everything that is neither a
/// Chinese character nor allowed punctuation.
#[derive(Debug, Clone)]
pub struct Cleaner {
    mapping: HashMap<char, char>,
    punctuation: HashSet<char>,
    ranges: CjkRanges,
}

impl Cleaner {
    pub fn new(trad_map: &CharMapTable, punct_map: &CharMapTable) -> Self {
        Self::with_ranges(trad_map, punct_map, CjkRanges::default())
    }

    pub fn with_ranges(trad_map: &CharMapTable, punct_map: &CharMapTable, ranges: CjkRanges) -> Self {
        // Compose both tables into a single map whose values are fixed points
        // of the composition, so cleaning stays idempotent even when user
        // tables chain into each other.
        let step = |c: char| punct_map.apply(trad_map.apply(c));
        let mut mapping = HashMap::new();
        for k in trad_map.iter().chain(punct_map.iter()).map(|(k, _)| k) {
            let mut cur = k;
            let mut seen = HashSet::from([k]);
            loop {
                let next = step(cur);
                if next == cur || !seen.insert(next) {
                    break;
                }
                cur = next;
            }
            if cur != k {
                mapping.insert(k, cur);
            }
        }
        let punctuation = ALLOWED_PUNCTUATION
            .iter()
            .copied()
            .chain(punct_map.values())
            .filter(|c| !mapping.contains_key(c))
            .collect();
        Self {
            mapping,
            punctuation,
            ranges,
        }
    }

    /// Cleaner backed by the tables shipped with the crate.
    pub fn bundled() -> Self {
        Self::new(&CharMapTable::bundled_trad2simp(), &CharMapTable::bundled_punct())
    }

    pub fn is_kept(&self, c: char) -> bool {
        self.ranges.contains(c) || self.punctuation.contains(&c)
    }

    pub fn clean(&self, raw: &str) -> String {
        raw.chars()
            .map(|c| self.mapping.get(&c).copied().unwrap_or(c))
            .filter(|&c| self.is_kept(c))
            .collect()
    }

    /// True when `text` already satisfies the cleaning postcondition.
    pub fn is_clean(&self, text: &str) -> bool {
        text.chars().all(|c| self.is_kept(c) && !self.mapping.contains_key(&c))
    }
}

/// One-shot cleaning. Prefer [`Cleaner`] when cleaning many texts.
pub fn clean_text(raw: &str, trad_map: &CharMapTable, punct_map: &CharMapTable) -> String {
    Cleaner::new(trad_map, punct_map).clean(raw)
}
