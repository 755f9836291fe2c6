//! Corpus-global four-sentence span deduplication.
//!
//! Every window of four consecutive sentences inside a document is reduced to
//! a [`SpanDigest`]. Documents are visited in `doc_id` order and windows left
//! to right; the first occurrence of a digest is kept and every later window
//! carrying it loses its four sentences. Digests are always taken over the
//! document's sentence list as it arrived, before any removal.
//!
//! Removing sentences can glue together a new window that repeats an earlier
//! one. [`dedup_corpus`] rescans its output and repeats the first-wins pass
//! with fresh state until no window repeats.

mod sharded;
mod state;

use std::collections::HashSet;
use std::fmt;
use std::hash::{BuildHasherDefault, Hasher};

use xxhash_rust::xxh3::xxh3_128_with_seed;

use crate::clean::CleanReport;
use crate::document::{Document, Stage};
use crate::exec::Execution;
use crate::text::is_blank;

pub use sharded::{ShardedPlan, ShardedPlanner};
pub use state::{StateError, DIGEST_ALGORITHM_ID, STATE_MAGIC, STATE_VERSION};

pub const WINDOW: usize = 4;
/// Fixed seed of the span hash. Changing it invalidates persisted states.
pub const DIGEST_SEED: u64 = 0x4335_5350_414e_3034;

/// 128-bit digest of one blank-stripped four-sentence window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpanDigest(pub u128);

impl fmt::Display for SpanDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:032x}", self.0)
    }
}

impl SpanDigest {
    pub fn of_window<S: AsRef<str>>(window: &[S]) -> Self {
        SpanDigest(xxh3_128_with_seed(
            normalize_window(window).as_bytes(),
            DIGEST_SEED,
        ))
    }
}

/// Concatenation of the window's sentences with every blank removed.
pub fn normalize_window<S: AsRef<str>>(window: &[S]) -> String {
    let mut out = String::new();
    for s in window {
        out.extend(s.as_ref().chars().filter(|&c| !is_blank(c)));
    }
    out
}

/// `(start, digest)` for each stride-1 window; empty below four sentences.
pub fn window_digests(doc: &Document) -> Vec<(usize, SpanDigest)> {
    let texts: Vec<&str> = doc.sentence_texts().collect();
    if texts.len() < WINDOW {
        return Vec::new();
    }
    texts
        .windows(WINDOW)
        .enumerate()
        .map(|(i, w)| (i, SpanDigest::of_window(w)))
        .collect()
}

/// Digests are uniformly distributed already; hash by their low bits.
#[derive(Default)]
pub struct DigestHasher(u64);

impl Hasher for DigestHasher {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = self.0.rotate_left(8) ^ u64::from(b);
        }
    }

    fn write_u128(&mut self, n: u128) {
        self.0 = n as u64;
    }
}

pub type DigestSet = HashSet<SpanDigest, BuildHasherDefault<DigestHasher>>;

/// Seen digests plus running counters.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DedupState {
    pub seen: DigestSet,
    pub spans_seen: u64,
    pub spans_removed: u64,
}

impl DedupState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn contains(&self, d: &SpanDigest) -> bool {
        self.seen.contains(d)
    }

    pub fn sorted_digests(&self) -> Vec<SpanDigest> {
        let mut v: Vec<SpanDigest> = self.seen.iter().copied().collect();
        v.sort_unstable();
        v
    }
}

/// Removes the sentences covered by the windows starting at `starts`.
/// Returns `false` when the document ends up empty.
pub fn remove_windows(doc: &mut Document, starts: &[usize]) -> bool {
    if !starts.is_empty() {
        let mut dead = vec![false; doc.sentences.len()];
        for &s in starts {
            for flag in dead.iter_mut().skip(s).take(WINDOW) {
                *flag = true;
            }
        }
        let mut i = 0;
        doc.sentences.retain(|_| {
            let keep = !dead[i];
            i += 1;
            keep
        });
    }
    !doc.sentences.is_empty()
}

/// Streaming first-wins deduper. Feed batches in `doc_id` order; the result
/// is the same however the corpus is cut into batches.
pub struct Deduper<'a> {
    state: &'a mut DedupState,
    exec: Execution,
}

impl<'a> Deduper<'a> {
    pub fn new(state: &'a mut DedupState, exec: Execution) -> Self {
        Self { state, exec }
    }

    pub fn process_batch(
        &mut self,
        docs: Vec<Document>,
        report: &mut CleanReport,
    ) -> Vec<Document> {
        let digests = self.exec.map_ref(&docs, window_digests);
        let mut out = Vec::with_capacity(docs.len());
        for (mut doc, windows) in docs.into_iter().zip(digests) {
            let mut losers = Vec::new();
            for (start, digest) in windows {
                self.state.spans_seen += 1;
                if !self.state.seen.insert(digest) {
                    losers.push(start);
                }
            }
            self.state.spans_removed += losers.len() as u64;
            report.spans_deduplicated += losers.len() as u64;
            if remove_windows(&mut doc, &losers) {
                let _ = doc.advance(Stage::Deduped);
                out.push(doc);
            } else {
                report.docs_dropped_dedup += 1;
            }
        }
        out
    }
}

/// A window that repeats an earlier one: `(doc_id, start)` of both.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RepeatedWindow {
    pub first: (u64, usize),
    pub repeat: (u64, usize),
}

/// Incremental rescan: reports the first window that repeats an earlier one.
#[derive(Default)]
pub struct Rescanner {
    seen: std::collections::HashMap<SpanDigest, (u64, usize), BuildHasherDefault<DigestHasher>>,
}

impl Rescanner {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn check(&mut self, doc: &Document) -> Option<RepeatedWindow> {
        for (start, digest) in window_digests(doc) {
            match self.seen.entry(digest) {
                std::collections::hash_map::Entry::Occupied(e) => {
                    return Some(RepeatedWindow {
                        first: *e.get(),
                        repeat: (doc.doc_id, start),
                    })
                }
                std::collections::hash_map::Entry::Vacant(e) => {
                    e.insert((doc.doc_id, start));
                }
            }
        }
        None
    }
}

pub fn find_repeated_window<'d>(
    docs: impl IntoIterator<Item = &'d Document>,
) -> Option<RepeatedWindow> {
    let mut scan = Rescanner::new();
    docs.into_iter().find_map(|d| scan.check(d))
}

/// Whole-corpus dedup: one pass against `state`, then fresh-state passes
/// until the rescan finds no repeated window.
pub fn dedup_corpus(
    docs: Vec<Document>,
    state: &mut DedupState,
    exec: Execution,
    report: &mut CleanReport,
) -> Vec<Document> {
    let mut out = Deduper::new(state, exec).process_batch(docs, report);
    while find_repeated_window(&out).is_some() {
        let mut fresh = DedupState::new();
        out = Deduper::new(&mut fresh, exec).process_batch(out, report);
        state.spans_removed += fresh.spans_removed;
    }
    out
}
