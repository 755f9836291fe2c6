use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Processing stage of a [`Document`]. Stages only move forward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Raw,
    Cleaned,
    Segmented,
    Deduped,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Raw => "raw",
            Stage::Cleaned => "cleaned",
            Stage::Segmented => "segmented",
            Stage::Deduped => "deduped",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("document {doc_id}: cannot move from stage {from} to {to}")]
pub struct StageError {
    pub doc_id: u64,
    pub from: Stage,
    pub to: Stage,
}

/// One sentence of a segmented document.
///
/// `char_len` is the number of Unicode scalar values and is always derived
/// from `text`; the text never contains a newline.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Sentence {
    text: String,
    char_len: usize,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("sentence contains a line break: {0:?}")]
pub struct SentenceError(pub String);

impl Sentence {
    pub fn new(text: impl Into<String>) -> Result<Self, SentenceError> {
        let text = text.into();
        if text.contains(['\n', '\r']) {
            return Err(SentenceError(text));
        }
        let char_len = text.chars().count();
        Ok(Self { text, char_len })
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn char_len(&self) -> usize {
        self.char_len
    }

    pub fn last_char(&self) -> Option<char> {
        self.text.chars().next_back()
    }
}

impl TryFrom<String> for Sentence {
    type Error = SentenceError;

    fn try_from(text: String) -> Result<Self, Self::Error> {
        Sentence::new(text)
    }
}

impl From<Sentence> for String {
    fn from(s: Sentence) -> String {
        s.text
    }
}

impl AsRef<str> for Sentence {
    fn as_ref(&self) -> &str {
        &self.text
    }
}

/// The unit of cleaning, window formation and splitting.
///
/// Before segmentation the content lives in `lines`; from the `segmented`
/// stage on it lives in `sentences` and `lines` is empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: u64,
    pub source_url: String,
    #[serde(default)]
    pub declared_languages: Vec<String>,
    #[serde(default)]
    pub lines: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sentences: Vec<Sentence>,
    pub stage: Stage,
}

impl Document {
    pub fn new(doc_id: u64, source_url: impl Into<String>, lines: Vec<String>) -> Self {
        Self {
            doc_id,
            source_url: source_url.into(),
            declared_languages: Vec::new(),
            lines,
            sentences: Vec::new(),
            stage: Stage::Raw,
        }
    }

    /// Builds a segmented document directly from sentence texts.
    pub fn from_sentences<I, S>(doc_id: u64, sentences: I) -> Result<Self, SentenceError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let sentences = sentences
            .into_iter()
            .map(Sentence::new)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            doc_id,
            source_url: String::new(),
            declared_languages: Vec::new(),
            lines: Vec::new(),
            sentences,
            stage: Stage::Segmented,
        })
    }

    /// Moves the document to `to`. Staying in place is allowed; going back is not.
    pub fn advance(&mut self, to: Stage) -> Result<(), StageError> {
        if to < self.stage {
            return Err(StageError {
                doc_id: self.doc_id,
                from: self.stage,
                to,
            });
        }
        self.stage = to;
        Ok(())
    }

    pub fn sentence_texts(&self) -> impl Iterator<Item = &str> {
        self.sentences.iter().map(Sentence::text)
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty() && self.sentences.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stages_only_move_forward() {
        let mut doc = Document::new(0, "http://a", vec![]);
        doc.advance(Stage::Cleaned).unwrap();
        doc.advance(Stage::Cleaned).unwrap();
        doc.advance(Stage::Deduped).unwrap();
        let err = doc.advance(Stage::Segmented).unwrap_err();
        assert_eq!(err.from, Stage::Deduped);
        assert_eq!(doc.stage, Stage::Deduped);
    }

    #[test]
    fn sentence_length_counts_scalars() {
        let s = Sentence::new("今天天气好。").unwrap();
        assert_eq!(s.char_len(), 6);
        assert_eq!(s.last_char(), Some('。'));
        assert!(Sentence::new("a\nb").is_err());
    }

    #[test]
    fn serde_shape_uses_contract_field_names() {
        let mut doc = Document::new(7, "http://x", vec!["你好".into()]);
        doc.declared_languages = vec!["zho".into()];
        let json = serde_json::to_value(&doc).unwrap();
        assert_eq!(json["doc_id"], 7);
        assert_eq!(json["source_url"], "http://x");
        assert_eq!(json["declared_languages"][0], "zho");
        assert_eq!(json["lines"][0], "你好");
        assert_eq!(json["stage"], "raw");
        let back: Document = serde_json::from_value(json).unwrap();
        assert_eq!(back, doc);
    }
}
