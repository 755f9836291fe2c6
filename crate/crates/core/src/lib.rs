//! Building blocks for a pre-training-ready Chinese corpus from Common Crawl
//! WET archives, plus the compact CLUE-style vocabulary and its tokenizer.
//!
//! The stages mirror the on-disk pipeline:
//!
//! ```text
//! ingest -> clean -> segment -> dedup -> split/emit
//! ```
//!
//! Every stage is a pure function of its input documents and configuration.
//! Per-document work is spread over a rayon pool when the `parallel` feature is
//! enabled; output order is always the canonical `doc_id` order, so the worker
//! count never changes a single output byte.

pub mod clean;
pub mod corpus;
pub mod dedup;
pub mod document;
pub mod exec;
pub mod ingest;
pub mod pipeline;
pub mod records;
pub mod segment;
pub mod synth;
pub mod text;
pub mod vocab;

pub use clean::{CleanConfig, CleanReport};
pub use corpus::{CorpusStats, SplitConfig, SplitLabel, SplitStats};
pub use dedup::{DedupState, SpanDigest};
pub use document::{Document, Sentence, Stage};
pub use exec::Execution;
pub use ingest::{RawRecord, WetReader};
pub use pipeline::{PipelineConfig, PipelineOutcome};
pub use segment::SegmentConfig;
pub use vocab::{Category, Vocabulary};
