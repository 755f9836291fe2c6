//! Sentence splitting and the sentence-level filters.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use aho_corasick::AhoCorasick;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clean::CleanReport;
use crate::document::{Document, Sentence, Stage};

/// Marks after which a line is split.
pub const FINAL_MARKS: [char; 5] = ['。', '！', '？', '；', '…'];
/// Closing quotes that stay with the sentence they close.
pub const CLOSING_QUOTES: [char; 2] = ['”', '’'];

pub const DEFAULT_TERMINAL_MARKS: [char; 6] = ['。', '？', '！', '”', '；', '…'];
pub const STRICT_TERMINAL_MARKS: [char; 3] = ['。', '？', '”'];

#[derive(Debug, Error)]
pub enum SegmentError {
    #[error("badword list was never loaded")]
    BadwordListMissing,
    #[error("cannot read badword list {path}: {source}")]
    BadwordRead {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("badword matcher: {0}")]
    Matcher(#[from] aho_corasick::BuildError),
    #[error("terminal_marks must not be empty")]
    NoTerminalMarks,
}

/// Substring matcher over an LDNOOBW-style term list.
#[derive(Clone)]
pub struct BadwordList {
    terms: Vec<String>,
    matcher: Option<Arc<AhoCorasick>>,
}

impl std::fmt::Debug for BadwordList {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BadwordList")
            .field("terms", &self.terms.len())
            .finish()
    }
}

impl BadwordList {
    pub fn new<I, S>(terms: I) -> Result<Self, SegmentError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut terms: Vec<String> = terms
            .into_iter()
            .map(Into::into)
            .filter(|t| !t.is_empty())
            .collect();
        terms.sort();
        terms.dedup();
        let matcher = if terms.is_empty() {
            None
        } else {
            Some(Arc::new(AhoCorasick::new(&terms)?))
        };
        Ok(Self { terms, matcher })
    }

    pub fn empty() -> Self {
        Self {
            terms: Vec::new(),
            matcher: None,
        }
    }

    /// One term per line; blank lines and lines starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Self, SegmentError> {
        Self::new(
            text.lines()
                .map(|l| l.trim_end_matches('\r').trim())
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    pub fn load(path: &Path) -> Result<Self, SegmentError> {
        let text = fs::read_to_string(path).map_err(|source| SegmentError::BadwordRead {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn matches(&self, text: &str) -> bool {
        self.matcher.as_ref().is_some_and(|m| m.is_match(text))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BraceRule {
    /// Either `{` or `}` removes the sentence.
    Both,
    /// Only `{` does.
    OpenOnly,
}

#[derive(Debug, Clone)]
pub struct SegmentConfig {
    pub terminal_marks: BTreeSet<char>,
    /// Sentences are kept only when strictly longer than this (in scalars).
    pub min_sentence_len: usize,
    pub brace_rule: BraceRule,
    /// `None` until a list is loaded; an empty list is a deliberate choice.
    pub badwords: Option<BadwordList>,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        Self {
            terminal_marks: DEFAULT_TERMINAL_MARKS.into_iter().collect(),
            min_sentence_len: 5,
            brace_rule: BraceRule::Both,
            badwords: None,
        }
    }
}

impl SegmentConfig {
    /// Literal reading: terminals {。？”} and only `{` triggers removal.
    pub fn strict_paper() -> Self {
        Self {
            terminal_marks: STRICT_TERMINAL_MARKS.into_iter().collect(),
            brace_rule: BraceRule::OpenOnly,
            ..Self::default()
        }
    }

    pub fn with_badwords(mut self, list: BadwordList) -> Self {
        self.badwords = Some(list);
        self
    }

    pub fn validate(&self) -> Result<(), SegmentError> {
        if self.terminal_marks.is_empty() {
            return Err(SegmentError::NoTerminalMarks);
        }
        Ok(())
    }

    fn has_brace(&self, text: &str) -> bool {
        match self.brace_rule {
            BraceRule::Both => text.contains(['{', '}']),
            BraceRule::OpenOnly => text.contains('{'),
        }
    }

    fn ends_terminal(&self, s: &Sentence) -> bool {
        s.last_char()
            .is_some_and(|c| self.terminal_marks.contains(&c))
    }
}

/// Splits a line after each run of sentence-final marks; closing quotes right
/// after the run stay with it. Joining the output gives back the input.
pub fn split_sentences(line: &str) -> Vec<Sentence> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut iter = line.char_indices().peekable();
    while let Some((_, c)) = iter.next() {
        if !FINAL_MARKS.contains(&c) {
            continue;
        }
        while let Some(&(_, next)) = iter.peek() {
            if FINAL_MARKS.contains(&next) || CLOSING_QUOTES.contains(&next) {
                iter.next();
            } else {
                break;
            }
        }
        let end = iter.peek().map_or(line.len(), |&(i, _)| i);
        push_segment(&mut out, &line[start..end]);
        start = end;
    }
    push_segment(&mut out, &line[start..]);
    out
}

fn push_segment(out: &mut Vec<Sentence>, segment: &str) {
    if segment.is_empty() {
        return;
    }
    // Lines never hold a newline, so this cannot fail; skip defensively otherwise.
    if let Ok(s) = Sentence::new(segment) {
        out.push(s);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropReason {
    Curly,
    Badword,
    Short,
}

/// First matching rule, in the order curly brace, badword, length.
pub fn sentence_verdict(
    s: &Sentence,
    cfg: &SegmentConfig,
    badwords: &BadwordList,
) -> Option<DropReason> {
    if cfg.has_brace(s.text()) {
        Some(DropReason::Curly)
    } else if badwords.matches(s.text()) {
        Some(DropReason::Badword)
    } else if s.char_len() <= cfg.min_sentence_len {
        Some(DropReason::Short)
    } else {
        None
    }
}

/// Removes curly-brace, badword and short sentences; survivors keep their order.
pub fn filter_sentences(
    doc: &mut Document,
    cfg: &SegmentConfig,
    report: &mut CleanReport,
) -> Result<(), SegmentError> {
    let badwords = cfg
        .badwords
        .as_ref()
        .ok_or(SegmentError::BadwordListMissing)?;
    doc.sentences
        .retain(|s| match sentence_verdict(s, cfg, badwords) {
            None => true,
            Some(reason) => {
                match reason {
                    DropReason::Curly => report.sentences_dropped_curly += 1,
                    DropReason::Badword => report.sentences_dropped_badword += 1,
                    DropReason::Short => report.sentences_dropped_short += 1,
                }
                false
            }
        });
    Ok(())
}

/// Drops trailing sentences until the last one ends with a terminal mark.
pub fn truncate_to_terminal(doc: &mut Document, cfg: &SegmentConfig, report: &mut CleanReport) {
    let keep = doc
        .sentences
        .iter()
        .rposition(|s| cfg.ends_terminal(s))
        .map_or(0, |i| i + 1);
    report.sentences_dropped_truncation += (doc.sentences.len() - keep) as u64;
    doc.sentences.truncate(keep);
}

/// Full segment stage for one cleaned document. `None` when nothing survives.
pub fn segment_document(
    mut doc: Document,
    cfg: &SegmentConfig,
    report: &mut CleanReport,
) -> Result<Option<Document>, SegmentError> {
    if cfg.badwords.is_none() {
        return Err(SegmentError::BadwordListMissing);
    }
    let lines = std::mem::take(&mut doc.lines);
    doc.sentences = lines.iter().flat_map(|l| split_sentences(l)).collect();
    // Forward-only transition; cleaned -> segmented always succeeds.
    let _ = doc.advance(Stage::Segmented);
    filter_sentences(&mut doc, cfg, report)?;
    truncate_to_terminal(&mut doc, cfg, report);
    if doc.sentences.is_empty() {
        report.docs_dropped_truncation += 1;
        return Ok(None);
    }
    Ok(Some(doc))
}

/// First invariant a segmented document violates, if any.
pub fn check_document(doc: &Document, cfg: &SegmentConfig) -> Option<String> {
    let empty = BadwordList::empty();
    let badwords = cfg.badwords.as_ref().unwrap_or(&empty);
    if doc.sentences.is_empty() {
        return Some(format!("document {} has no sentences", doc.doc_id));
    }
    for (i, s) in doc.sentences.iter().enumerate() {
        if let Some(reason) = sentence_verdict(s, cfg, badwords) {
            return Some(format!(
                "document {} sentence {i}: violates {reason:?} rule",
                doc.doc_id
            ));
        }
    }
    match doc.sentences.last() {
        Some(last) if !cfg.ends_terminal(last) => Some(format!(
            "document {}: final sentence does not end with a terminal mark",
            doc.doc_id
        )),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(v: &[Sentence]) -> Vec<&str> {
        v.iter().map(Sentence::text).collect()
    }

    fn cfg() -> SegmentConfig {
        SegmentConfig::default().with_badwords(BadwordList::new(["赌博"]).unwrap())
    }

    #[test]
    fn split_examples() {
        assert_eq!(
            texts(&split_sentences("今天很好。明天呢？后天见")),
            ["今天很好。", "明天呢？", "后天见"]
        );
        assert_eq!(
            texts(&split_sentences("他说：“走吧。”然后离开。")),
            ["他说：“走吧。”", "然后离开。"]
        );
        assert_eq!(texts(&split_sentences("没有标点")), ["没有标点"]);
        assert!(split_sentences("").is_empty());
    }

    #[test]
    fn runs_of_marks_stay_together() {
        assert_eq!(
            texts(&split_sentences("真的吗？！好……走吧")),
            ["真的吗？！", "好……", "走吧"]
        );
        assert_eq!(texts(&split_sentences("。。")), ["。。"]);
    }

    #[test]
    fn filter_rules_in_order() {
        let mut doc = Document::from_sentences(
            0,
            [
                "function() { return; }",
                "今天天气好。",
                "天气好。",
                "一二三四五",
                "这是一个赌博网站哦。",
                "只有右括号}也算代码",
                "{赌博}",
            ],
        )
        .unwrap();
        let mut report = CleanReport::default();
        filter_sentences(&mut doc, &cfg(), &mut report).unwrap();
        assert_eq!(texts(&doc.sentences), ["今天天气好。"]);
        assert_eq!(report.sentences_dropped_curly, 3);
        assert_eq!(report.sentences_dropped_badword, 1);
        assert_eq!(report.sentences_dropped_short, 2);
    }

    #[test]
    fn strict_mode_only_open_brace() {
        let strict = SegmentConfig::strict_paper().with_badwords(BadwordList::empty());
        let mut doc =
            Document::from_sentences(0, ["只有右括号}也算代码", "左括号{也算代码"]).unwrap();
        filter_sentences(&mut doc, &strict, &mut CleanReport::default()).unwrap();
        assert_eq!(texts(&doc.sentences), ["只有右括号}也算代码"]);
    }

    #[test]
    fn missing_badwords_is_an_error() {
        let mut doc = Document::from_sentences(0, ["今天天气好。"]).unwrap();
        let err = filter_sentences(
            &mut doc,
            &SegmentConfig::default(),
            &mut CleanReport::default(),
        );
        assert!(matches!(err, Err(SegmentError::BadwordListMissing)));
        let ok = SegmentConfig::default().with_badwords(BadwordList::empty());
        filter_sentences(&mut doc, &ok, &mut CleanReport::default()).unwrap();
        assert_eq!(doc.sentences.len(), 1);
    }

    #[test]
    fn truncation_examples() {
        let c = cfg();
        let mut report = CleanReport::default();
        let mut doc = Document::from_sentences(0, ["今天很好。", "明天呢？", "后天见"]).unwrap();
        truncate_to_terminal(&mut doc, &c, &mut report);
        assert_eq!(texts(&doc.sentences), ["今天很好。", "明天呢？"]);
        assert_eq!(report.sentences_dropped_truncation, 1);

        let mut doc = Document::from_sentences(0, ["一。", "二。"]).unwrap();
        truncate_to_terminal(&mut doc, &c, &mut report);
        assert_eq!(doc.sentences.len(), 2);

        let mut doc = Document::from_sentences(0, ["没有标点符号的碎片"]).unwrap();
        truncate_to_terminal(&mut doc, &c, &mut report);
        assert!(doc.sentences.is_empty());
    }

    #[test]
    fn strict_terminals_exclude_exclamation() {
        let strict = SegmentConfig::strict_paper();
        let mut doc = Document::from_sentences(0, ["好的。", "太好了！"]).unwrap();
        truncate_to_terminal(&mut doc, &strict, &mut CleanReport::default());
        assert_eq!(texts(&doc.sentences), ["好的。"]);
    }

    #[test]
    fn segment_document_end_to_end() {
        let mut doc = Document::new(
            3,
            "u",
            vec![
                "今天天气很好。我们去公园吧！天气好。".into(),
                "最后一句没有标点符号".into(),
            ],
        );
        doc.advance(Stage::Cleaned).unwrap();
        let mut report = CleanReport::default();
        let out = segment_document(doc, &cfg(), &mut report).unwrap().unwrap();
        assert_eq!(texts(&out.sentences), ["今天天气很好。", "我们去公园吧！"]);
        assert_eq!(out.stage, Stage::Segmented);
        assert!(out.lines.is_empty());
        assert!(check_document(&out, &cfg()).is_none());
        assert_eq!(report.sentences_dropped_short, 1);
        assert_eq!(report.sentences_dropped_truncation, 1);

        let doc = Document::new(4, "u", vec!["短。".into()]);
        assert!(segment_document(doc, &cfg(), &mut report)
            .unwrap()
            .is_none());
        assert_eq!(report.docs_dropped_truncation, 1);
    }

    #[test]
    fn badword_file_format() {
        let list = BadwordList::parse("# comment\n赌博\r\n\n色情\n").unwrap();
        assert_eq!(list.terms(), ["色情", "赌博"]);
        assert!(list.matches("不要赌博了"));
        assert!(!BadwordList::empty().matches("赌博"));
    }
}
