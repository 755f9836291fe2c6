//! Document- and line-level filters applied before sentence segmentation.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::AddAssign;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::document::{Document, Stage};
use crate::text::{is_blank, is_cjk_ideograph};

#[derive(Debug, Error, PartialEq)]
pub enum CleanError {
    #[error("min_chinese_ratio must lie in [0, 1], got {0}")]
    RatioOutOfRange(f64),
    #[error("report line {line}: {reason}")]
    BadReport { line: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanConfig {
    pub min_chinese_ratio: f64,
    pub language_metadata_trusted: bool,
    pub javascript_case_insensitive: bool,
}

impl Default for CleanConfig {
    fn default() -> Self {
        Self {
            min_chinese_ratio: 0.5,
            language_metadata_trusted: true,
            javascript_case_insensitive: true,
        }
    }
}

impl CleanConfig {
    /// Literal reading: only the casings "Javascript" and "JavaScript" match.
    pub fn strict_paper() -> Self {
        Self {
            javascript_case_insensitive: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), CleanError> {
        if !(0.0..=1.0).contains(&self.min_chinese_ratio) {
            return Err(CleanError::RatioOutOfRange(self.min_chinese_ratio));
        }
        Ok(())
    }
}

/// Per-rule drop counters. Reports from disjoint shards add up.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanReport {
    pub docs_dropped_language: u64,
    pub lines_dropped_javascript: u64,
    pub lines_whitespace_normalized: u64,
    pub sentences_dropped_curly: u64,
    pub sentences_dropped_badword: u64,
    pub sentences_dropped_short: u64,
    pub sentences_dropped_truncation: u64,
    pub docs_dropped_truncation: u64,
    pub spans_deduplicated: u64,
    pub docs_dropped_dedup: u64,
}

macro_rules! report_fields {
    ($mac:ident) => {
        $mac!(
            docs_dropped_language,
            lines_dropped_javascript,
            lines_whitespace_normalized,
            sentences_dropped_curly,
            sentences_dropped_badword,
            sentences_dropped_short,
            sentences_dropped_truncation,
            docs_dropped_truncation,
            spans_deduplicated,
            docs_dropped_dedup
        )
    };
}

impl CleanReport {
    /// Counters as `(name, value)` pairs in a fixed order.
    pub fn entries(&self) -> Vec<(&'static str, u64)> {
        macro_rules! collect {
            ($($f:ident),*) => { vec![$((stringify!($f), self.$f)),*] };
        }
        report_fields!(collect)
    }

    fn slot(&mut self, name: &str) -> Option<&mut u64> {
        macro_rules! lookup {
            ($($f:ident),*) => {
                match name {
                    $(stringify!($f) => Some(&mut self.$f),)*
                    _ => None,
                }
            };
        }
        report_fields!(lookup)
    }

    /// Flat `key=value` text, one counter per line.
    pub fn to_kv(&self) -> String {
        self.entries()
            .into_iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }

    /// Parses [`to_kv`](Self::to_kv) output. Unknown keys are rejected; blank
    /// lines and `#` comments are ignored; missing keys read as zero.
    pub fn from_kv(text: &str) -> Result<Self, CleanError> {
        let mut report = CleanReport::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |reason: &str| CleanError::BadReport {
                line: i + 1,
                reason: reason.to_string(),
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad("expected key=value"))?;
            let value: u64 = value
                .trim()
                .parse()
                .map_err(|_| bad("value is not a count"))?;
            *report
                .slot(key.trim())
                .ok_or_else(|| bad("unknown counter"))? = value;
        }
        Ok(report)
    }

    pub fn as_map(&self) -> BTreeMap<&'static str, u64> {
        self.entries().into_iter().collect()
    }
}

impl AddAssign for CleanReport {
    fn add_assign(&mut self, rhs: Self) {
        macro_rules! add {
            ($($f:ident),*) => {{ $(self.$f += rhs.$f;)* }};
        }
        report_fields!(add);
    }
}

impl std::iter::Sum for CleanReport {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(CleanReport::default(), |mut acc, r| {
            acc += r;
            acc
        })
    }
}

impl fmt::Display for CleanReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.entries() {
            writeln!(f, "{k:<30} {v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanguageDecision {
    pub keep: bool,
    /// CJK ideographs over non-blank code points; 0 for blank-only content.
    pub ratio: f64,
}

fn declares_chinese(languages: &[String]) -> bool {
    languages.iter().any(|l| {
        let l = l.trim().to_ascii_lowercase();
        l == "zho" || l == "zh" || l.starts_with("zh-") || l.starts_with("zh_")
    })
}

pub fn chinese_ratio<'a>(lines: impl IntoIterator<Item = &'a str>) -> f64 {
    let (mut cjk, mut total) = (0usize, 0usize);
    for line in lines {
        for c in line.chars().filter(|&c| !is_blank(c)) {
            total += 1;
            if is_cjk_ideograph(c) {
                cjk += 1;
            }
        }
    }
    if total == 0 {
        0.0
    } else {
        cjk as f64 / total as f64
    }
}

/// Chinese-language selection. Trusted metadata decides when present;
/// otherwise the CJK ratio must reach `min_chinese_ratio`.
pub fn is_chinese(doc: &Document, cfg: &CleanConfig) -> LanguageDecision {
    let ratio = chinese_ratio(doc.lines.iter().map(String::as_str));
    if cfg.language_metadata_trusted && !doc.declared_languages.is_empty() {
        return LanguageDecision {
            keep: declares_chinese(&doc.declared_languages),
            ratio,
        };
    }
    let has_content = doc.lines.iter().any(|l| l.chars().any(|c| !is_blank(c)));
    LanguageDecision {
        keep: has_content && ratio >= cfg.min_chinese_ratio,
        ratio,
    }
}

/// Collapses every run of blank characters to one ASCII space and removes
/// leading and trailing runs.
pub fn normalize_whitespace(line: &str) -> String {
    let mut out = String::with_capacity(line.len());
    let mut pending_blank = false;
    for c in line.chars() {
        if is_blank(c) {
            pending_blank = true;
        } else {
            if pending_blank && !out.is_empty() {
                out.push(' ');
            }
            pending_blank = false;
            out.push(c);
        }
    }
    out
}

fn mentions_javascript(line: &str, case_insensitive: bool) -> bool {
    if case_insensitive {
        line.as_bytes()
            .windows(10)
            .any(|w| w.eq_ignore_ascii_case(b"javascript"))
    } else {
        line.contains("Javascript") || line.contains("JavaScript")
    }
}

/// Removes every line mentioning Javascript; returns the number removed.
pub fn drop_javascript_lines(doc: &mut Document, cfg: &CleanConfig) -> u64 {
    let before = doc.lines.len();
    doc.lines
        .retain(|l| !mentions_javascript(l, cfg.javascript_case_insensitive));
    (before - doc.lines.len()) as u64
}

/// Full clean stage for one raw document: Javascript lines out, whitespace
/// normalized, blank lines dropped, then the language decision on what is left.
/// Returns `None` when the document is dropped.
pub fn clean_document(
    mut doc: Document,
    cfg: &CleanConfig,
    report: &mut CleanReport,
) -> Option<Document> {
    report.lines_dropped_javascript += drop_javascript_lines(&mut doc, cfg);
    let mut lines = Vec::with_capacity(doc.lines.len());
    for line in doc.lines.drain(..) {
        let normalized = normalize_whitespace(&line);
        if normalized != line {
            report.lines_whitespace_normalized += 1;
        }
        if !normalized.is_empty() {
            lines.push(normalized);
        }
    }
    doc.lines = lines;
    if !is_chinese(&doc, cfg).keep {
        report.docs_dropped_language += 1;
        return None;
    }
    doc.advance(Stage::Cleaned).ok()?;
    Some(doc)
}
