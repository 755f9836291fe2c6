//! Intermediate record files: one JSON document per line.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::document::Document;

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("{path}:{line}: {source}")]
    Parse {
        path: String,
        line: u64,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}:{line}: doc_id {doc_id} does not increase (previous {prev})")]
    OutOfOrder {
        path: String,
        line: u64,
        doc_id: u64,
        prev: u64,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

pub struct RecordReader<R> {
    inner: R,
    path: String,
    line: u64,
    last_id: Option<u64>,
    buf: String,
}

impl RecordReader<BufReader<File>> {
    pub fn open(path: &Path) -> Result<Self, RecordError> {
        let file = File::open(path).map_err(|source| RecordError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(Self::new(
            BufReader::with_capacity(1 << 16, file),
            path.display().to_string(),
        ))
    }
}

impl<R: BufRead> RecordReader<R> {
    pub fn new(inner: R, name: String) -> Self {
        Self {
            inner,
            path: name,
            line: 0,
            last_id: None,
            buf: String::new(),
        }
    }

    /// Up to `n` documents; empty at end of file.
    pub fn next_batch(&mut self, n: usize) -> Result<Vec<Document>, RecordError> {
        let mut batch = Vec::with_capacity(n.min(4096));
        while batch.len() < n {
            match self.next() {
                Some(doc) => batch.push(doc?),
                None => break,
            }
        }
        Ok(batch)
    }
}

impl<R: BufRead> Iterator for RecordReader<R> {
    type Item = Result<Document, RecordError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            match self.inner.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(source) => {
                    return Some(Err(RecordError::Io {
                        path: self.path.clone(),
                        source,
                    }))
                }
            }
            self.line += 1;
            if self.buf.trim().is_empty() {
                continue;
            }
            let doc: Document = match serde_json::from_str(&self.buf) {
                Ok(d) => d,
                Err(source) => {
                    return Some(Err(RecordError::Parse {
                        path: self.path.clone(),
                        line: self.line,
                        source,
                    }))
                }
            };
            if let Some(prev) = self.last_id {
                if doc.doc_id <= prev {
                    return Some(Err(RecordError::OutOfOrder {
                        path: self.path.clone(),
                        line: self.line,
                        doc_id: doc.doc_id,
                        prev,
                    }));
                }
            }
            self.last_id = Some(doc.doc_id);
            return Some(Ok(doc));
        }
    }
}

pub struct RecordWriter {
    inner: BufWriter<File>,
    path: PathBuf,
    written: u64,
}

impl RecordWriter {
    pub fn create(path: &Path) -> Result<Self, RecordError> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(|source| RecordError::Io {
                path: parent.display().to_string(),
                source,
            })?;
        }
        let file = File::create(path).map_err(|source| RecordError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(Self {
            inner: BufWriter::with_capacity(1 << 16, file),
            path: path.to_path_buf(),
            written: 0,
        })
    }

    fn io(&self, source: io::Error) -> RecordError {
        RecordError::Io {
            path: self.path.display().to_string(),
            source,
        }
    }

    pub fn write(&mut self, doc: &Document) -> Result<(), RecordError> {
        serde_json::to_writer(&mut self.inner, doc).map_err(|e| self.io(e.into()))?;
        self.inner.write_all(b"\n").map_err(|e| self.io(e))?;
        self.written += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<u64, RecordError> {
        self.inner.flush().map_err(|e| self.io(e))?;
        Ok(self.written)
    }
}

pub fn read_all(path: &Path) -> Result<Vec<Document>, RecordError> {
    RecordReader::open(path)?.collect()
}

pub fn write_all<'d>(
    path: &Path,
    docs: impl IntoIterator<Item = &'d Document>,
) -> Result<u64, RecordError> {
    let mut w = RecordWriter::create(path)?;
    for d in docs {
        w.write(d)?;
    }
    w.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_order_check() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        let docs = vec![
            Document::new(0, "a", vec!["一".into()]),
            Document::from_sentences(2, ["今天很好。"]).unwrap(),
        ];
        assert_eq!(write_all(&path, &docs).unwrap(), 2);
        assert_eq!(read_all(&path).unwrap(), docs);

        let bad = dir.path().join("bad.jsonl");
        write_all(&bad, [&docs[1], &docs[0]]).unwrap();
        assert!(matches!(
            read_all(&bad),
            Err(RecordError::OutOfOrder { line: 2, .. })
        ));
    }
}
