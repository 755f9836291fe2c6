//! Vocabulary categorization, pruning to the compact vocabulary, and
//! character-level tokenization.
//!
//! The file format is the BERT convention: UTF-8, one surface per line, id =
//! zero-based line number.

mod category;
mod prune;
mod tokenizer;

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use category::{
    categorize, content_of, is_emoji, is_hangul, is_kana, is_special, is_traditional,
    required_specials, Category, NAMED_SPECIALS,
};
pub use prune::{prune, PruneReport, PruneRules};
pub use tokenizer::split_units;

#[derive(Debug, Error)]
pub enum VocabError {
    #[error("line {line}: duplicate token {surface:?}")]
    DuplicateSurface { line: usize, surface: String },
    #[error("line {line}: empty token")]
    EmptySurface { line: usize },
    #[error("vocabulary lacks special tokens: {0:?}")]
    MissingSpecials(Vec<String>),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenEntry {
    pub surface: String,
    pub is_suffix: bool,
    pub category: Category,
    pub original_id: u32,
}

impl TokenEntry {
    pub fn new(surface: String, original_id: u32) -> Self {
        Self {
            is_suffix: surface.starts_with("##"),
            category: categorize(&surface),
            surface,
            original_id,
        }
    }

    pub fn content(&self) -> &str {
        content_of(&self.surface)
    }
}

/// Ordered tokens, id = position. Immutable once built.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    entries: Vec<TokenEntry>,
    lookup: HashMap<String, u32>,
    unk_id: Option<u32>,
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}

impl Eq for Vocabulary {}

impl Vocabulary {
    /// Builds from surfaces in id order; `original_id` is the position.
    pub fn from_surfaces<I, S>(surfaces: I) -> Result<Self, VocabError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let entries = surfaces
            .into_iter()
            .enumerate()
            .map(|(i, s)| TokenEntry::new(s.into(), i as u32))
            .collect();
        Self::from_entries(entries)
    }

    /// Keeps each entry's `original_id`; ids are re-assigned by position.
    pub fn from_entries(entries: Vec<TokenEntry>) -> Result<Self, VocabError> {
        let mut lookup = HashMap::with_capacity(entries.len());
        for (i, e) in entries.iter().enumerate() {
            if e.surface.is_empty() {
                return Err(VocabError::EmptySurface { line: i + 1 });
            }
            if lookup.insert(e.surface.clone(), i as u32).is_some() {
                return Err(VocabError::DuplicateSurface {
                    line: i + 1,
                    surface: e.surface.clone(),
                });
            }
        }
        let unk_id = lookup.get("[UNK]").copied();
        Ok(Self {
            entries,
            lookup,
            unk_id,
        })
    }

    pub fn parse(text: &str) -> Result<Self, VocabError> {
        let body = text.strip_suffix('\n').unwrap_or(text);
        if body.is_empty() {
            return Self::from_surfaces(Vec::<String>::new());
        }
        Self::from_surfaces(body.split('\n'))
    }

    pub fn load(path: &Path) -> Result<Self, VocabError> {
        let text = fs::read_to_string(path).map_err(|source| VocabError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&e.surface);
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<(), VocabError> {
        fs::write(path, self.to_text()).map_err(|source| VocabError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[TokenEntry] {
        &self.entries
    }

    pub fn id(&self, surface: &str) -> Option<u32> {
        self.lookup.get(surface).copied()
    }

    pub fn surface(&self, id: u32) -> Option<&str> {
        self.entries.get(id as usize).map(|e| e.surface.as_str())
    }

    pub fn unk_id(&self) -> Option<u32> {
        self.unk_id
    }

    pub fn missing_specials(&self) -> Vec<String> {
        required_specials()
            .into_iter()
            .filter(|s| !self.lookup.contains_key(s))
            .collect()
    }

    /// Token count per category, every category present.
    pub fn category_counts(&self) -> BTreeMap<Category, u64> {
        let mut counts: BTreeMap<Category, u64> = Category::ALL.iter().map(|&c| (c, 0)).collect();
        for e in &self.entries {
            *counts.entry(e.category).or_default() += 1;
        }
        counts
    }
}

/// `category<TAB>count` lines followed by the total.
pub fn format_category_report(counts: &BTreeMap<Category, u64>) -> String {
    let mut out = String::new();
    for c in Category::ALL {
        out.push_str(&format!(
            "{}\t{}\n",
            c,
            counts.get(&c).copied().unwrap_or(0)
        ));
    }
    out.push_str(&format!("total\t{}\n", counts.values().sum::<u64>()));
    out
}
