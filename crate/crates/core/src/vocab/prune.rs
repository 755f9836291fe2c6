use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Category, TokenEntry, VocabError, Vocabulary};
use crate::text::is_cjk_ideograph;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PruneRules {
    pub year_min: u32,
    pub year_max: u32,
    /// Keep `##`-prefixed Chinese characters. Character tokenization never
    /// produces them, so they are dropped by default.
    pub keep_cjk_suffix_pieces: bool,
    /// An Other token survives with at most this many special symbols.
    pub max_special_symbols: usize,
}

impl Default for PruneRules {
    fn default() -> Self {
        Self {
            year_min: 1800,
            year_max: 2030,
            keep_cjk_suffix_pieces: false,
            max_special_symbols: 2,
        }
    }
}

/// Kept/removed counts per input category.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PruneReport {
    pub kept: BTreeMap<Category, u64>,
    pub removed: BTreeMap<Category, u64>,
}

impl PruneReport {
    pub fn kept_total(&self) -> u64 {
        self.kept.values().sum()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("category\tkept\tremoved\n");
        for c in Category::ALL {
            out.push_str(&format!(
                "{}\t{}\t{}\n",
                c,
                self.kept.get(&c).copied().unwrap_or(0),
                self.removed.get(&c).copied().unwrap_or(0)
            ));
        }
        out.push_str(&format!(
            "total\t{}\t{}\n",
            self.kept_total(),
            self.removed.values().sum::<u64>()
        ));
        out
    }
}

fn is_special_symbol(c: char) -> bool {
    !(c.is_alphanumeric() || is_cjk_ideograph(c))
}

fn keeps(e: &TokenEntry, rules: &PruneRules) -> bool {
    let content = e.content();
    match e.category {
        Category::Special => true,
        Category::SimplifiedChinese => !e.is_suffix || rules.keep_cjk_suffix_pieces,
        Category::TraditionalChinese | Category::Japanese | Category::Korean | Category::Emoji => {
            false
        }
        Category::English => e.is_suffix || content.chars().count() == 1,
        Category::Number => {
            let single_digit = content.len() == 1 && content.as_bytes()[0].is_ascii_digit();
            let year = !e.is_suffix
                && content.len() == 4
                && content.bytes().all(|b| b.is_ascii_digit())
                && content
                    .parse::<u32>()
                    .is_ok_and(|y| (rules.year_min..=rules.year_max).contains(&y));
            single_digit || year
        }
        Category::Other => {
            content.chars().filter(|&c| is_special_symbol(c)).count() <= rules.max_special_symbols
        }
    }
}

/// Prunes to the compact vocabulary. Order is preserved and ids are dense from 0.
pub fn prune(
    vocab: &Vocabulary,
    rules: &PruneRules,
) -> Result<(Vocabulary, PruneReport), VocabError> {
    let missing = vocab.missing_specials();
    if !missing.is_empty() {
        return Err(VocabError::MissingSpecials(missing));
    }
    let mut report = PruneReport {
        kept: Category::ALL.iter().map(|&c| (c, 0)).collect(),
        removed: Category::ALL.iter().map(|&c| (c, 0)).collect(),
    };
    let mut kept = Vec::new();
    for e in vocab.entries() {
        if keeps(e, rules) {
            *report.kept.entry(e.category).or_default() += 1;
            kept.push(e.clone());
        } else {
            *report.removed.entry(e.category).or_default() += 1;
        }
    }
    Ok((Vocabulary::from_entries(kept)?, report))
}
