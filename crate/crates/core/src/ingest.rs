//! Streaming reader for Common Crawl WET files.
//!
//! A WET file is a sequence of WARC records:
//!
//! ```text
//! WARC/1.0\r\n
//! Name: value\r\n
//! ...
//! \r\n
//! <Content-Length bytes of payload>\r\n
//! \r\n
//! ```
//!
//! Only `conversion` records are yielded. Records with an unparseable header
//! or a non-UTF-8 payload are skipped and counted; a payload shorter than its
//! declared length or a damaged gzip stream aborts the read.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Read};
use std::path::Path;

use flate2::read::MultiGzDecoder;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::document::Document;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("truncated record at byte {offset}: declared {expected} payload bytes, found {found}")]
    TruncatedRecord {
        offset: u64,
        expected: u64,
        found: u64,
    },
    #[error("truncated header block at byte {offset}")]
    TruncatedHeader { offset: u64 },
    #[error("gzip stream is damaged: {0}")]
    BadCompression(#[source] io::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// One `conversion` record from a WET file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawRecord {
    pub url: String,
    pub declared_languages: Vec<String>,
    pub timestamp: String,
    pub body: String,
}

/// Per-file counters. `emitted + skipped_malformed + skipped_non_utf8` equals
/// the number of conversion records (malformed records are counted whatever
/// their type, since the type may be unreadable).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestStats {
    pub emitted: u64,
    pub skipped_malformed: u64,
    pub skipped_non_utf8: u64,
    pub other_records: u64,
}

impl IngestStats {
    pub fn skipped(&self) -> u64 {
        self.skipped_malformed + self.skipped_non_utf8
    }

    pub fn merge(&mut self, other: &IngestStats) {
        self.emitted += other.emitted;
        self.skipped_malformed += other.skipped_malformed;
        self.skipped_non_utf8 += other.skipped_non_utf8;
        self.other_records += other.other_records;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GzipMode {
    /// Detect from the gzip magic bytes.
    #[default]
    Auto,
    On,
    Off,
}

impl std::str::FromStr for GzipMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(GzipMode::Auto),
            "on" => Ok(GzipMode::On),
            "off" => Ok(GzipMode::Off),
            other => Err(format!("expected auto|on|off, got {other:?}")),
        }
    }
}

#[derive(Default)]
struct Header {
    warc_type: Option<String>,
    url: Option<String>,
    date: Option<String>,
    languages: Option<String>,
    content_length: Option<u64>,
    malformed: bool,
}

impl Header {
    fn set(&mut self, name: &str, value: &str) {
        let value = value.trim();
        if name.eq_ignore_ascii_case("WARC-Type") {
            self.warc_type = Some(value.to_string());
        } else if name.eq_ignore_ascii_case("WARC-Target-URI") {
            self.url = Some(value.to_string());
        } else if name.eq_ignore_ascii_case("WARC-Date") {
            self.date = Some(value.to_string());
        } else if name.eq_ignore_ascii_case("WARC-Identified-Content-Language") {
            self.languages = Some(value.to_string());
        } else if name.eq_ignore_ascii_case("Content-Length") {
            match value.parse() {
                Ok(n) => self.content_length = Some(n),
                Err(_) => self.malformed = true,
            }
        }
    }
}

/// Iterator over the conversion records of one WET stream.
pub struct WetReader<R> {
    inner: R,
    compressed: bool,
    offset: u64,
    stats: IngestStats,
    line: Vec<u8>,
    resync: bool,
    finished: bool,
}

impl<R: BufRead> WetReader<R> {
    /// `compressed` only affects error classification; pass a decoding reader.
    pub fn new(inner: R, compressed: bool) -> Self {
        Self {
            inner,
            compressed,
            offset: 0,
            stats: IngestStats::default(),
            line: Vec::with_capacity(256),
            resync: false,
            finished: false,
        }
    }

    pub fn stats(&self) -> IngestStats {
        self.stats
    }

    fn io_error(&self, e: io::Error) -> IngestError {
        if self.compressed {
            IngestError::BadCompression(e)
        } else {
            IngestError::Io(e)
        }
    }

    /// Reads one line (with terminator) into `self.line`; returns false at EOF.
    fn read_line(&mut self) -> Result<bool, IngestError> {
        self.line.clear();
        let n = self
            .inner
            .read_until(b'\n', &mut self.line)
            .map_err(|e| self.io_error(e))?;
        self.offset += n as u64;
        Ok(n > 0)
    }

    fn trimmed_line(&self) -> &[u8] {
        let mut l = self.line.as_slice();
        while let Some((&last, rest)) = l.split_last() {
            if last == b'\n' || last == b'\r' {
                l = rest;
            } else {
                break;
            }
        }
        l
    }

    fn read_record(&mut self) -> Result<Option<RawRecord>, IngestError> {
        loop {
            // Seek the version line, skipping inter-record blank lines.
            loop {
                if !self.read_line()? {
                    return Ok(None);
                }
                let line = self.trimmed_line();
                if line.is_empty() {
                    continue;
                }
                if line.starts_with(b"WARC/") {
                    self.resync = false;
                    break;
                }
                if !self.resync {
                    self.stats.skipped_malformed += 1;
                    self.resync = true;
                }
            }

            let header_start = self.offset;
            let mut header = Header::default();
            let mut last_name: Option<String> = None;
            loop {
                if !self.read_line()? {
                    return Err(IngestError::TruncatedHeader {
                        offset: header_start,
                    });
                }
                let line = self.trimmed_line();
                if line.is_empty() {
                    break;
                }
                let Ok(text) = std::str::from_utf8(line) else {
                    header.malformed = true;
                    continue;
                };
                if text.starts_with([' ', '\t']) {
                    // Folded continuation of the previous field.
                    if last_name.is_none() {
                        header.malformed = true;
                    }
                    continue;
                }
                match text.split_once(':') {
                    Some((name, value))
                        if !name.is_empty() && !name.contains(char::is_whitespace) =>
                    {
                        header.set(name, value);
                        last_name = Some(name.to_string());
                    }
                    _ => header.malformed = true,
                }
            }

            let Some(len) = header.content_length else {
                self.stats.skipped_malformed += 1;
                self.resync = true;
                continue;
            };

            let payload_start = self.offset;
            let mut payload = Vec::with_capacity(len.min(1 << 24) as usize);
            let got = (&mut self.inner)
                .take(len)
                .read_to_end(&mut payload)
                .map_err(|e| self.io_error(e))? as u64;
            self.offset += got;
            if got < len {
                return Err(IngestError::TruncatedRecord {
                    offset: payload_start,
                    expected: len,
                    found: got,
                });
            }

            let is_conversion = header
                .warc_type
                .as_deref()
                .is_some_and(|t| t.eq_ignore_ascii_case("conversion"));
            let url = header.url.take().filter(|u| !u.is_empty());
            if header.malformed || header.warc_type.is_none() || (is_conversion && url.is_none()) {
                self.stats.skipped_malformed += 1;
                continue;
            }
            if !is_conversion {
                self.stats.other_records += 1;
                continue;
            }
            let body = match String::from_utf8(payload) {
                Ok(body) => body,
                Err(_) => {
                    self.stats.skipped_non_utf8 += 1;
                    continue;
                }
            };
            let declared_languages = header
                .languages
                .as_deref()
                .map(|langs| {
                    langs
                        .split(',')
                        .map(str::trim)
                        .filter(|l| !l.is_empty())
                        .map(str::to_string)
                        .collect()
                })
                .unwrap_or_default();
            self.stats.emitted += 1;
            return Ok(Some(RawRecord {
                url: url.unwrap_or_default(),
                declared_languages,
                timestamp: header.date.unwrap_or_default(),
                body,
            }));
        }
    }
}

impl<R: BufRead> Iterator for WetReader<R> {
    type Item = Result<RawRecord, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.finished {
            return None;
        }
        match self.read_record() {
            Ok(Some(rec)) => Some(Ok(rec)),
            Ok(None) => {
                self.finished = true;
                None
            }
            Err(e) => {
                self.finished = true;
                Some(Err(e))
            }
        }
    }
}

/// Wraps `source` in a gzip decoder when `compressed`.
pub fn wet_reader<'a, R: Read + 'a>(
    source: R,
    compressed: bool,
) -> WetReader<Box<dyn BufRead + 'a>> {
    let inner: Box<dyn BufRead + 'a> = if compressed {
        Box::new(BufReader::with_capacity(
            1 << 16,
            MultiGzDecoder::new(source),
        ))
    } else {
        Box::new(BufReader::with_capacity(1 << 16, source))
    };
    WetReader::new(inner, compressed)
}

/// Reads a whole stream. On an aborting error the partial output is discarded.
pub fn read_wet_stream<R: Read>(
    source: R,
    compressed: bool,
) -> Result<(Vec<RawRecord>, IngestStats), IngestError> {
    let mut reader = wet_reader(source, compressed);
    let records = reader.by_ref().collect::<Result<Vec<_>, _>>()?;
    Ok((records, reader.stats()))
}

/// Opens a WET file from disk, resolving [`GzipMode::Auto`] from the magic bytes.
pub fn open_wet(path: &Path, mode: GzipMode) -> Result<WetReader<Box<dyn BufRead>>, IngestError> {
    let mut file = BufReader::new(File::open(path)?);
    let compressed = match mode {
        GzipMode::On => true,
        GzipMode::Off => false,
        GzipMode::Auto => file.fill_buf()?.starts_with(&[0x1f, 0x8b]),
    };
    Ok(wet_reader(file, compressed))
}

pub fn read_wet_file(
    path: &Path,
    mode: GzipMode,
) -> Result<(Vec<RawRecord>, IngestStats), IngestError> {
    let mut reader = open_wet(path, mode)?;
    let records = reader.by_ref().collect::<Result<Vec<_>, _>>()?;
    Ok((records, reader.stats()))
}

/// Lifts a record into a raw document: the body split on `\n` with `\r` removed.
pub fn record_to_document(rec: RawRecord, next_id: u64) -> Document {
    let lines = if rec.body.is_empty() {
        Vec::new()
    } else {
        rec.body.split('\n').map(|l| l.replace('\r', "")).collect()
    };
    let mut doc = Document::new(next_id, rec.url, lines);
    doc.declared_languages = rec.declared_languages;
    doc
}

/// Serializes one conversion record in WET layout.
pub fn write_conversion_record(
    out: &mut impl io::Write,
    url: &str,
    date: &str,
    languages: &[&str],
    body: &[u8],
) -> io::Result<()> {
    write!(
        out,
        "WARC/1.0\r\nWARC-Type: conversion\r\nWARC-Target-URI: {url}\r\nWARC-Date: {date}\r\n"
    )?;
    if !languages.is_empty() {
        write!(
            out,
            "WARC-Identified-Content-Language: {}\r\n",
            languages.join(",")
        )?;
    }
    write!(
        out,
        "Content-Type: text/plain\r\nContent-Length: {}\r\n\r\n",
        body.len()
    )?;
    out.write_all(body)?;
    out.write_all(b"\r\n\r\n")
}
