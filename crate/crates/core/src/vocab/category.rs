//! Token classes of a BERT-Chinese style vocabulary.

use std::collections::HashSet;
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::text::is_cjk_ideograph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    SimplifiedChinese,
    TraditionalChinese,
    English,
    Japanese,
    Korean,
    Emoji,
    Number,
    Special,
    Other,
}

impl Category {
    pub const ALL: [Category; 9] = [
        Category::SimplifiedChinese,
        Category::TraditionalChinese,
        Category::English,
        Category::Japanese,
        Category::Korean,
        Category::Emoji,
        Category::Number,
        Category::Special,
        Category::Other,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::SimplifiedChinese => "simplified_chinese",
            Category::TraditionalChinese => "traditional_chinese",
            Category::English => "english",
            Category::Japanese => "japanese",
            Category::Korean => "korean",
            Category::Emoji => "emoji",
            Category::Number => "numbers",
            Category::Special => "special_tokens",
            Category::Other => "other_tokens",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub const NAMED_SPECIALS: [&str; 7] = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]", "<S>", "<T>"];
pub const UNUSED_SLOTS: u32 = 99;

/// `[unusedN]` with a decimal N.
pub fn is_unused_slot(surface: &str) -> bool {
    surface
        .strip_prefix("[unused")
        .and_then(|rest| rest.strip_suffix(']'))
        .is_some_and(|n| !n.is_empty() && n.bytes().all(|b| b.is_ascii_digit()))
}

pub fn is_special(surface: &str) -> bool {
    NAMED_SPECIALS.contains(&surface) || is_unused_slot(surface)
}

/// The 106 special tokens every vocabulary must carry.
pub fn required_specials() -> Vec<String> {
    let mut v: Vec<String> = NAMED_SPECIALS.iter().map(|s| s.to_string()).collect();
    v.extend((1..=UNUSED_SLOTS).map(|i| format!("[unused{i}]")));
    v
}

/// Dingbats (U+2700..U+27BF) that carry the Unicode `Emoji` property.
const EMOJI_DINGBATS: [u32; 33] = [
    0x2702, 0x2705, 0x2708, 0x2709, 0x270A, 0x270B, 0x270C, 0x270D, 0x270F, 0x2712, 0x2714, 0x2716,
    0x271D, 0x2721, 0x2728, 0x2733, 0x2734, 0x2744, 0x2747, 0x274C, 0x274E, 0x2753, 0x2754, 0x2755,
    0x2757, 0x2763, 0x2764, 0x2795, 0x2796, 0x2797, 0x27A1, 0x27B0, 0x27BF,
];

pub fn is_emoji(c: char) -> bool {
    let cp = c as u32;
    (0x1F300..=0x1FAFF).contains(&cp)
        || (0x2600..=0x26FF).contains(&cp)
        || cp == 0xFE0F
        || EMOJI_DINGBATS.binary_search(&cp).is_ok()
}

pub fn is_kana(c: char) -> bool {
    ('\u{3040}'..='\u{30FF}').contains(&c)
}

pub fn is_hangul(c: char) -> bool {
    ('\u{AC00}'..='\u{D7AF}').contains(&c)
        || ('\u{1100}'..='\u{11FF}').contains(&c)
        || ('\u{3130}'..='\u{318F}').contains(&c)
}

fn is_decimal_digit(c: char) -> bool {
    c.is_ascii_digit() || ('\u{FF10}'..='\u{FF19}').contains(&c)
}

/// Traditional characters with a distinct simplified form.
fn traditional_set() -> &'static HashSet<char> {
    static SET: OnceLock<HashSet<char>> = OnceLock::new();
    SET.get_or_init(|| {
        include_str!("../../data/ts_characters.txt")
            .lines()
            .filter_map(|line| {
                let (trad, simp) = line.split_once('\t')?;
                let mut t = trad.chars();
                let c = t.next()?;
                if t.next().is_some() {
                    return None;
                }
                let first = simp.split(' ').next()?;
                (first != trad).then_some(c)
            })
            .collect()
    })
}

pub fn is_traditional(c: char) -> bool {
    traditional_set().contains(&c)
}

/// Surface with a leading `##` removed.
pub fn content_of(surface: &str) -> &str {
    match surface.strip_prefix("##") {
        Some(rest) if !rest.is_empty() => rest,
        _ => surface,
    }
}

/// Priority classification; see the crate README for the rule table.
pub fn categorize(surface: &str) -> Category {
    if is_special(surface) {
        return Category::Special;
    }
    let content = content_of(surface);
    if content.chars().any(is_emoji) {
        return Category::Emoji;
    }
    if content.chars().any(is_kana) {
        return Category::Japanese;
    }
    if content.chars().any(is_hangul) {
        return Category::Korean;
    }
    let first = content.chars().next();
    let ascii_alnum = !content.is_empty() && content.bytes().all(|b| b.is_ascii_alphanumeric());
    if content.chars().all(is_decimal_digit)
        || (ascii_alnum && first.is_some_and(|c| c.is_ascii_digit()))
    {
        return Category::Number;
    }
    if ascii_alnum {
        return Category::English;
    }
    let mut chars = content.chars();
    if let (Some(c), None) = (chars.next(), chars.next()) {
        if is_cjk_ideograph(c) {
            return if is_traditional(c) {
                Category::TraditionalChinese
            } else {
                Category::SimplifiedChinese
            };
        }
    }
    Category::Other
}
