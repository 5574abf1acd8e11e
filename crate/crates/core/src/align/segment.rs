use serde::{Deserialize, Serialize};

use super::Lexicon;

/// Half-open character range `[start, end)` within a sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

/// Forward maximum matching: at every position take the longest lexicon
/// word, falling back to a single character.
pub fn segment_target(y: &str, lex: &Lexicon) -> Vec<Span> {
    // byte offset of every char boundary, including the end
    let bounds: Vec<usize> = y
        .char_indices()
        .map(|(b, _)| b)
        .chain(std::iter::once(y.len()))
        .collect();
    let n = bounds.len() - 1;
    let mut spans = Vec::new();
    let mut pos = 0;
    while pos < n {
        let longest = lex.max_word_len().min(n - pos);
        let len = (2..=longest)
            .rev()
            .find(|&l| lex.contains(&y[bounds[pos]..bounds[pos + l]]))
            .unwrap_or(1);
        spans.push(Span::new(pos, pos + len));
        pos += len;
    }
    spans
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(y: &str, spans: &[Span]) -> Vec<String> {
        let c: Vec<char> = y.chars().collect();
        spans.iter().map(|s| c[s.start..s.end].iter().collect()).collect()
    }

    #[test]
    fn exact_tiling() {
        let lex = Lexicon::new(["理解", "并且", "学习"]).unwrap();
        let y = "理解并且学习";
        assert_eq!(words(y, &segment_target(y, &lex)), ["理解", "并且", "学习"]);
    }

    #[test]
    fn empty_input() {
        assert!(segment_target("", &Lexicon::bundled()).is_empty());
    }

    #[test]
    fn longest_match_wins() {
        let lex = Lexicon::new(["大学", "学生", "大学生"]).unwrap();
        assert_eq!(words("大学生", &segment_target("大学生", &lex)), ["大学生"]);
    }

    #[test]
    fn unknown_characters_fall_back_to_singletons() {
        let lex = Lexicon::new(["理解"]).unwrap();
        assert_eq!(words("理解这件事", &segment_target("理解这件事", &lex)), ["理解", "这", "件", "事"]);
    }
}
