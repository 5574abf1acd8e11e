use serde::{Deserialize, Serialize};

use super::CorpusError;

/// Top-level genre of a text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    History,
    Article,
    Novel,
}

/// Chronological subdivision, only meaningful for [`Category::History`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Era {
    Old,
    Middle,
    EarlyModern,
}

/// One monolingual ancient sentence, or an ancient-modern translation pair.
///
/// The JSON-lines form uses the keys `id`, `src`, `tgt`, `category`, `era`
/// and `origin`; `tgt` and `era` may be omitted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RecordLine")]
pub struct CorpusRecord {
    pub id: String,
    #[serde(rename = "src")]
    pub source: String,
    #[serde(rename = "tgt", skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    pub category: Category,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub era: Option<Era>,
    pub origin: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordLine {
    id: String,
    src: String,
    #[serde(default)]
    tgt: Option<String>,
    category: Category,
    #[serde(default)]
    era: Option<Era>,
    #[serde(default)]
    origin: String,
}

impl TryFrom<RecordLine> for CorpusRecord {
    type Error = CorpusError;

    fn try_from(line: RecordLine) -> Result<Self, Self::Error> {
        CorpusRecord::new(line.id, line.src, line.tgt, line.category, line.era, line.origin)
    }
}

impl CorpusRecord {
    pub fn new(
        id: impl Into<String>,
        source: impl Into<String>,
        target: Option<String>,
        category: Category,
        era: Option<Era>,
        origin: impl Into<String>,
    ) -> Result<Self, CorpusError> {
        let id = id.into();
        if era.is_some() != (category == Category::History) {
            return Err(CorpusError::EraMismatch { id });
        }
        Ok(Self {
            id,
            source: source.into(),
            target,
            category,
            era,
            origin: origin.into(),
        })
    }

    /// Shorthand for a parallel pair classified as `Article` (no era).
    pub fn pair(id: impl Into<String>, source: impl Into<String>, target: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            source: source.into(),
            target: Some(target.into()),
            category: Category::Article,
            era: None,
            origin: String::new(),
        }
    }

    pub fn is_parallel(&self) -> bool {
        self.target.is_some()
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("record serialisation cannot fail")
    }
}
