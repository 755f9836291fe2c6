use super::Vocabulary;
use crate::text::is_blank;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit<'a> {
    /// Maximal run of ASCII letters and digits.
    Word(&'a str),
    /// Any other single non-blank code point (each CJK ideograph included).
    Char(&'a str),
}

/// Splits text into tokenization units; blanks only separate.
pub fn split_units(text: &str) -> Vec<Unit<'_>> {
    let mut units = Vec::new();
    let mut run_start: Option<usize> = None;
    for (i, c) in text.char_indices() {
        if c.is_ascii_alphanumeric() {
            run_start.get_or_insert(i);
            continue;
        }
        if let Some(s) = run_start.take() {
            units.push(Unit::Word(&text[s..i]));
        }
        if !is_blank(c) {
            units.push(Unit::Char(&text[i..i + c.len_utf8()]));
        }
    }
    if let Some(s) = run_start {
        units.push(Unit::Word(&text[s..]));
    }
    units
}

impl Vocabulary {
    /// Greedy longest-match pieces for one ASCII run, or `None` when some
    /// position has no matching piece.
    fn word_pieces(&self, word: &str, out: &mut Vec<u32>) -> bool {
        let mark = out.len();
        let mut start = 0;
        let mut candidate = String::with_capacity(word.len() + 2);
        while start < word.len() {
            let mut end = word.len();
            let mut found = None;
            while end > start {
                candidate.clear();
                if start > 0 {
                    candidate.push_str("##");
                }
                candidate.push_str(&word[start..end]);
                if let Some(id) = self.id(&candidate) {
                    found = Some(id);
                    break;
                }
                end -= 1;
            }
            match found {
                Some(id) => {
                    out.push(id);
                    start = end;
                }
                None => {
                    out.truncate(mark);
                    return false;
                }
            }
        }
        true
    }

    fn tokenize_into(&self, text: &str, lowercase: bool, out: &mut Vec<u32>) {
        let mut lowered = String::new();
        for unit in split_units(text) {
            match unit {
                Unit::Char(c) => {
                    if let Some(id) = self.id(c).or(self.unk_id()) {
                        out.push(id);
                    }
                }
                Unit::Word(w) => {
                    let w = if lowercase {
                        lowered.clear();
                        lowered.extend(w.chars().map(|c| c.to_ascii_lowercase()));
                        lowered.as_str()
                    } else {
                        w
                    };
                    if !self.word_pieces(w, out) {
                        out.extend(self.unk_id());
                    }
                }
            }
        }
    }

    /// Character tokenization for CJK, greedy word pieces for ASCII runs.
    /// Unknown units map to `[UNK]` (and are dropped if the vocabulary has none).
    pub fn tokenize(&self, text: &str) -> Vec<u32> {
        let mut out = Vec::new();
        self.tokenize_into(text, false, &mut out);
        out
    }

    /// As [`tokenize`](Self::tokenize), folding ASCII letters to lowercase first.
    pub fn tokenize_lowercase(&self, text: &str) -> Vec<u32> {
        let mut out = Vec::new();
        self.tokenize_into(text, true, &mut out);
        out
    }

    /// Joins token surfaces: `##` pieces attach to the previous piece and a
    /// space separates two consecutive ASCII words.
    pub fn detokenize(&self, ids: &[u32]) -> String {
        let mut out = String::new();
        let mut prev_ascii_word = false;
        for &id in ids {
            let Some(entry) = self.entries().get(id as usize) else {
                continue;
            };
            let content = entry.content();
            let ascii_word = content.bytes().all(|b| b.is_ascii_alphanumeric());
            if entry.is_suffix {
                out.push_str(content);
            } else {
                if prev_ascii_word && ascii_word {
                    out.push(' ');
                }
                out.push_str(&entry.surface);
            }
            prev_ascii_word = ascii_word;
        }
        out
    }
}
