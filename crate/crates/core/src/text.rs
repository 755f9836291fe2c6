//! Character classes shared by the cleaning, segmentation and dedup stages.

/// Blank characters: the Unicode `White_Space` property plus the zero-width
/// space and the zero-width no-break space (byte-order mark).
pub fn is_blank(c: char) -> bool {
    c.is_whitespace() || c == '\u{200B}' || c == '\u{FEFF}'
}

/// CJK Unified Ideographs block, U+4E00..=U+9FFF.
pub fn is_cjk_ideograph(c: char) -> bool {
    ('\u{4E00}'..='\u{9FFF}').contains(&c)
}

/// Copy of `s` with every blank character removed.
pub fn strip_blanks(s: &str) -> String {
    s.chars().filter(|&c| !is_blank(c)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blank_set_covers_invisible_characters() {
        for c in [
            ' ', '\t', '\u{00A0}', '\u{3000}', '\u{200B}', '\u{FEFF}', '\u{2028}',
        ] {
            assert!(is_blank(c), "{:?}", c);
        }
        for c in ['a', '。', '你', '\u{200D}'] {
            assert!(!is_blank(c), "{:?}", c);
        }
    }

    #[test]
    fn cjk_block_bounds() {
        assert!(is_cjk_ideograph('\u{4E00}'));
        assert!(is_cjk_ideograph('\u{9FFF}'));
        assert!(!is_cjk_ideograph('\u{3400}'));
        assert!(!is_cjk_ideograph('。'));
    }
}
