//! Train/dev/test splitting, the pre-training text format and corpus statistics.
//!
//! The format is UTF-8 text with one sentence per line and one empty line
//! closing every document:
//!
//! ```text
//! 今天很好。\n
//! 明天见。\n
//! \n
//! ```

use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::ops::AddAssign;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use xxhash_rust::xxh3::xxh3_64_with_seed;

use crate::document::Document;
use crate::vocab::Vocabulary;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitLabel {
    Train,
    Dev,
    Test,
}

impl SplitLabel {
    pub const ALL: [SplitLabel; 3] = [SplitLabel::Train, SplitLabel::Dev, SplitLabel::Test];

    pub fn name(self) -> &'static str {
        match self {
            SplitLabel::Train => "train",
            SplitLabel::Dev => "dev",
            SplitLabel::Test => "test",
        }
    }
}

impl fmt::Display for SplitLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SplitConfigError {
    #[error("split ratios must be finite and non-negative with a positive sum, got {0:?}")]
    BadRatios([f64; 3]),
    #[error("cannot parse ratios {0:?}; expected train:dev:test")]
    Unparseable(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    /// Weights for (train, dev, test); only their proportions matter.
    pub ratios: [f64; 3],
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            ratios: [99.0, 0.5, 0.5],
            seed: 0,
        }
    }
}

impl SplitConfig {
    pub fn new(ratios: [f64; 3], seed: u64) -> Result<Self, SplitConfigError> {
        let cfg = Self { ratios, seed };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SplitConfigError> {
        let ok = self.ratios.iter().all(|r| r.is_finite() && *r >= 0.0)
            && self.ratios.iter().sum::<f64>() > 0.0;
        if ok {
            Ok(())
        } else {
            Err(SplitConfigError::BadRatios(self.ratios))
        }
    }

    /// Parses `"99:0.5:0.5"`.
    pub fn parse_ratios(s: &str) -> Result<[f64; 3], SplitConfigError> {
        let parts: Vec<f64> = s
            .split(':')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| SplitConfigError::Unparseable(s.to_string()))?;
        parts
            .try_into()
            .map_err(|_| SplitConfigError::Unparseable(s.to_string()))
    }
}

/// Uniform draw in [0, 1) from `(seed, doc_id)`.
pub fn split_draw(seed: u64, doc_id: u64) -> f64 {
    let h = xxh3_64_with_seed(&doc_id.to_le_bytes(), seed);
    (h >> 11) as f64 / (1u64 << 53) as f64
}

/// Label from the cumulative normalized ratios. Depends only on `(seed, doc_id)`.
pub fn assign_split(doc_id: u64, cfg: &SplitConfig) -> SplitLabel {
    let total: f64 = cfg.ratios.iter().sum();
    let u = split_draw(cfg.seed, doc_id);
    let mut cumulative = 0.0;
    let mut last_nonzero = SplitLabel::Train;
    for (label, &w) in SplitLabel::ALL.iter().zip(&cfg.ratios) {
        if w <= 0.0 {
            continue;
        }
        last_nonzero = *label;
        cumulative += w / total;
        if u < cumulative {
            return *label;
        }
    }
    // Rounding can leave the cumulative sum a hair below 1.
    last_nonzero
}

/// Counts for one split (or one file).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitStats {
    pub token_count: u64,
    pub sentence_count: u64,
    pub document_count: u64,
    pub byte_size: u64,
}

impl AddAssign for SplitStats {
    fn add_assign(&mut self, rhs: Self) {
        self.token_count += rhs.token_count;
        self.sentence_count += rhs.sentence_count;
        self.document_count += rhs.document_count;
        self.byte_size += rhs.byte_size;
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub train: SplitStats,
    pub dev: SplitStats,
    pub test: SplitStats,
}

impl CorpusStats {
    pub fn get(&self, label: SplitLabel) -> &SplitStats {
        match label {
            SplitLabel::Train => &self.train,
            SplitLabel::Dev => &self.dev,
            SplitLabel::Test => &self.test,
        }
    }

    pub fn get_mut(&mut self, label: SplitLabel) -> &mut SplitStats {
        match label {
            SplitLabel::Train => &mut self.train,
            SplitLabel::Dev => &mut self.dev,
            SplitLabel::Test => &mut self.test,
        }
    }
}

/// Statistics table: tokens in billions, sentences in millions, size in GB,
/// followed by the exact counts.
pub fn format_stats_table(rows: &[(&str, SplitStats)]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<8} {:>10} {:>14} {:>10} {:>16} {:>14} {:>12} {:>16}\n",
        "Dataset",
        "Token(B)",
        "Sentences(M)",
        "Size(GB)",
        "tokens",
        "sentences",
        "documents",
        "bytes"
    ));
    for (name, s) in rows {
        out.push_str(&format!(
            "{:<8} {:>10.4} {:>14.4} {:>10.4} {:>16} {:>14} {:>12} {:>16}\n",
            name,
            s.token_count as f64 / 1e9,
            s.sentence_count as f64 / 1e6,
            s.byte_size as f64 / 1e9,
            s.token_count,
            s.sentence_count,
            s.document_count,
            s.byte_size
        ));
    }
    out
}

impl fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<(&str, SplitStats)> = SplitLabel::ALL
            .iter()
            .map(|l| (l.name(), *self.get(*l)))
            .collect();
        f.write_str(&format_stats_table(&rows))
    }
}

/// What a "token" is when counting.
#[derive(Clone, Copy)]
pub enum TokenUnit<'a> {
    /// Unicode scalar values.
    Chars,
    Vocab(&'a Vocabulary),
}

impl TokenUnit<'_> {
    pub fn count(&self, sentence: &str) -> u64 {
        match self {
            TokenUnit::Chars => sentence.chars().count() as u64,
            TokenUnit::Vocab(v) => v.tokenize(sentence).len() as u64,
        }
    }
}

#[derive(Debug, Error)]
pub enum EmitError {
    #[error("document {doc_id} has no sentences")]
    EmptyDocument { doc_id: u64 },
    #[error("document {doc_id}: sentence {index} is empty or holds a line break")]
    InvalidSentence { doc_id: u64, index: usize },
    #[error("write failed: {0}")]
    WriteFailure(#[from] io::Error),
}

fn check_emittable(doc: &Document) -> Result<(), EmitError> {
    if doc.sentences.is_empty() {
        return Err(EmitError::EmptyDocument { doc_id: doc.doc_id });
    }
    if let Some(index) = doc
        .sentences
        .iter()
        .position(|s| s.text().is_empty() || s.text().contains(['\n', '\r']))
    {
        return Err(EmitError::InvalidSentence {
            doc_id: doc.doc_id,
            index,
        });
    }
    Ok(())
}

/// Writes one document; returns its stats contribution.
pub fn emit_document<W: Write>(
    doc: &Document,
    out: &mut W,
    unit: TokenUnit<'_>,
) -> Result<SplitStats, EmitError> {
    check_emittable(doc)?;
    let mut stats = SplitStats {
        document_count: 1,
        byte_size: 1,
        ..SplitStats::default()
    };
    for s in &doc.sentences {
        out.write_all(s.text().as_bytes())?;
        out.write_all(b"\n")?;
        stats.sentence_count += 1;
        stats.byte_size += s.text().len() as u64 + 1;
        stats.token_count += unit.count(s.text());
    }
    out.write_all(b"\n")?;
    Ok(stats)
}

pub fn emit_pretraining<'d, W: Write>(
    docs: impl IntoIterator<Item = &'d Document>,
    out: &mut W,
    unit: TokenUnit<'_>,
) -> Result<SplitStats, EmitError> {
    let mut total = SplitStats::default();
    for doc in docs {
        total += emit_document(doc, out, unit)?;
    }
    out.flush()?;
    Ok(total)
}

#[derive(Debug, Error)]
pub enum FormatViolation {
    #[error("line {line}: consecutive blank lines")]
    ConsecutiveBlankLines { line: u64 },
    #[error("line 1: file starts with a blank line")]
    LeadingBlankLine,
    #[error("file does not end with a blank line")]
    MissingFinalBlankLine,
    #[error("line {line}: invalid UTF-8")]
    InvalidUtf8 { line: u64 },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

/// Streams a pre-training file, handing each document's sentences to `visit`.
fn scan_pretraining<R: BufRead>(
    mut reader: R,
    mut visit: impl FnMut(&[String]),
) -> Result<u64, FormatViolation> {
    let mut buf = Vec::new();
    let mut doc: Vec<String> = Vec::new();
    let mut line_no = 0u64;
    let mut bytes = 0u64;
    let mut prev_blank: Option<bool> = None;
    let mut ended_with_newline = true;
    loop {
        buf.clear();
        let n = reader
            .read_until(b'\n', &mut buf)
            .map_err(|source| FormatViolation::Io {
                path: String::from("<stream>"),
                source,
            })?;
        if n == 0 {
            break;
        }
        line_no += 1;
        bytes += n as u64;
        ended_with_newline = buf.last() == Some(&b'\n');
        let content = if ended_with_newline {
            &buf[..n - 1]
        } else {
            &buf[..]
        };
        let blank = content.is_empty();
        if blank {
            match prev_blank {
                None => return Err(FormatViolation::LeadingBlankLine),
                Some(true) => return Err(FormatViolation::ConsecutiveBlankLines { line: line_no }),
                Some(false) => {
                    visit(&doc);
                    doc.clear();
                }
            }
        } else {
            let text = std::str::from_utf8(content)
                .map_err(|_| FormatViolation::InvalidUtf8 { line: line_no })?;
            doc.push(text.to_string());
        }
        prev_blank = Some(blank);
    }
    if prev_blank == Some(false) || !ended_with_newline {
        return Err(FormatViolation::MissingFinalBlankLine);
    }
    Ok(bytes)
}

/// Parses a pre-training file back into per-document sentence lists.
pub fn parse_pretraining<R: BufRead>(reader: R) -> Result<Vec<Vec<String>>, FormatViolation> {
    let mut docs = Vec::new();
    scan_pretraining(reader, |d| docs.push(d.to_vec()))?;
    Ok(docs)
}

pub fn compute_stats<R: BufRead>(
    reader: R,
    unit: TokenUnit<'_>,
) -> Result<SplitStats, FormatViolation> {
    let mut stats = SplitStats::default();
    let bytes = scan_pretraining(reader, |doc| {
        stats.document_count += 1;
        for s in doc {
            stats.sentence_count += 1;
            stats.token_count += unit.count(s);
        }
    })?;
    stats.byte_size = bytes;
    Ok(stats)
}

pub fn compute_file_stats(path: &Path, unit: TokenUnit<'_>) -> Result<SplitStats, FormatViolation> {
    let io_err = |source| FormatViolation::Io {
        path: path.display().to_string(),
        source,
    };
    let file = File::open(path).map_err(io_err)?;
    compute_stats(BufReader::new(file), unit).map_err(|e| match e {
        FormatViolation::Io { source, .. } => FormatViolation::Io {
            path: path.display().to_string(),
            source,
        },
        other => other,
    })
}

/// Regular files under `dir` in lexicographic order.
pub fn corpus_files(dir: &Path) -> io::Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    files.sort();
    Ok(files)
}

/// Writes one split as numbered files of at most `max_bytes` each (a single
/// document larger than the limit gets a file of its own).
pub struct SplitWriter {
    dir: PathBuf,
    label: SplitLabel,
    max_bytes: u64,
    index: usize,
    current: Option<BufWriter<File>>,
    current_bytes: u64,
    pub stats: SplitStats,
    files: Vec<PathBuf>,
}

impl SplitWriter {
    pub fn new(dir: &Path, label: SplitLabel, max_bytes: u64) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            label,
            max_bytes: max_bytes.max(1),
            index: 0,
            current: None,
            current_bytes: 0,
            stats: SplitStats::default(),
            files: Vec::new(),
        })
    }

    fn roll(&mut self) -> io::Result<()> {
        if let Some(mut w) = self.current.take() {
            w.flush()?;
        }
        let path = self
            .dir
            .join(format!("{}-{:05}.txt", self.label, self.index));
        self.index += 1;
        self.current = Some(BufWriter::new(File::create(&path)?));
        self.files.push(path);
        self.current_bytes = 0;
        Ok(())
    }

    pub fn write(&mut self, doc: &Document, unit: TokenUnit<'_>) -> Result<(), EmitError> {
        check_emittable(doc)?;
        let size: u64 = doc
            .sentences
            .iter()
            .map(|s| s.text().len() as u64 + 1)
            .sum::<u64>()
            + 1;
        if self.current.is_none()
            || (self.current_bytes > 0 && self.current_bytes + size > self.max_bytes)
        {
            self.roll()?;
        }
        let w = self.current.as_mut().expect("file opened by roll");
        let delta = emit_document(doc, w, unit)?;
        self.current_bytes += delta.byte_size;
        self.stats += delta;
        Ok(())
    }

    /// Flushes and returns the files written, in order.
    pub fn finish(mut self) -> io::Result<(SplitStats, Vec<PathBuf>)> {
        if let Some(mut w) = self.current.take() {
            w.flush()?;
        }
        Ok((self.stats, self.files))
    }
}
