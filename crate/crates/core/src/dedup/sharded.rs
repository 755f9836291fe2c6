//! Two-pass dedup for digest sets that do not fit in memory.
//!
//! Pass 1 spills `(digest, document ordinal, window start)` records into
//! shard files partitioned by the digest's top bits. Each shard is then sorted
//! on its own; within a digest group the smallest `(ordinal, start)` wins and
//! the rest lose. Pass 2 deletes the losing windows. The winners are exactly
//! the ones the streaming [`Deduper`](super::Deduper) keeps.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use tempfile::TempDir;

use super::{DedupState, SpanDigest};

const RECORD_LEN: usize = 16 + 8 + 4;

pub struct ShardedPlanner {
    dir: TempDir,
    writers: Vec<BufWriter<File>>,
    next_ordinal: u64,
}

fn shard_of(d: SpanDigest, shards: usize) -> usize {
    let prefix = (d.0 >> 64) as u64;
    ((u128::from(prefix) * shards as u128) >> 64) as usize
}

impl ShardedPlanner {
    /// Shard files go to a fresh temporary directory under `spill_dir`
    /// (the system temp dir when `None`).
    pub fn new(shards: usize, spill_dir: Option<&Path>) -> io::Result<Self> {
        let shards = shards.max(1);
        let dir = match spill_dir {
            Some(p) => {
                fs::create_dir_all(p)?;
                tempfile::Builder::new().prefix("c5-dedup-").tempdir_in(p)?
            }
            None => tempfile::Builder::new().prefix("c5-dedup-").tempdir()?,
        };
        let writers = (0..shards)
            .map(|i| File::create(dir.path().join(format!("shard-{i:05}.bin"))).map(BufWriter::new))
            .collect::<io::Result<Vec<_>>>()?;
        Ok(Self {
            dir,
            writers,
            next_ordinal: 0,
        })
    }

    pub fn shard_count(&self) -> usize {
        self.writers.len()
    }

    /// Registers the next document's windows; returns its ordinal.
    pub fn add(&mut self, windows: &[(usize, SpanDigest)]) -> io::Result<u64> {
        let ordinal = self.next_ordinal;
        self.next_ordinal += 1;
        let shards = self.writers.len();
        for &(start, digest) in windows {
            let w = &mut self.writers[shard_of(digest, shards)];
            w.write_all(&digest.0.to_le_bytes())?;
            w.write_all(&ordinal.to_le_bytes())?;
            w.write_all(&(start as u32).to_le_bytes())?;
        }
        Ok(ordinal)
    }

    /// Resolves every shard against `state` (digests already in it count as
    /// earlier occurrences) and inserts the new digests.
    pub fn finish(self, state: &mut DedupState) -> io::Result<ShardedPlan> {
        let ShardedPlanner { dir, writers, .. } = self;
        let shards = writers.len();
        for w in writers {
            w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        }
        let mut losers: HashMap<u64, Vec<usize>> = HashMap::new();
        for i in 0..shards {
            let path = dir.path().join(format!("shard-{i:05}.bin"));
            let mut bytes = Vec::new();
            BufReader::new(File::open(&path)?).read_to_end(&mut bytes)?;
            let mut records: Vec<(u128, u64, u32)> = bytes
                .chunks_exact(RECORD_LEN)
                .map(|c| {
                    (
                        u128::from_le_bytes(c[..16].try_into().unwrap()),
                        u64::from_le_bytes(c[16..24].try_into().unwrap()),
                        u32::from_le_bytes(c[24..].try_into().unwrap()),
                    )
                })
                .collect();
            drop(bytes);
            fs::remove_file(&path)?;
            records.sort_unstable();
            let mut prev: Option<u128> = None;
            for (digest, ordinal, start) in records {
                state.spans_seen += 1;
                let is_repeat = prev == Some(digest) || !state.seen.insert(SpanDigest(digest));
                prev = Some(digest);
                if is_repeat {
                    state.spans_removed += 1;
                    losers.entry(ordinal).or_default().push(start as usize);
                }
            }
        }
        for starts in losers.values_mut() {
            starts.sort_unstable();
        }
        Ok(ShardedPlan { losers })
    }
}

/// Losing windows per document ordinal.
#[derive(Debug, Default)]
pub struct ShardedPlan {
    losers: HashMap<u64, Vec<usize>>,
}

impl ShardedPlan {
    pub fn losers_for(&self, ordinal: u64) -> &[usize] {
        self.losers.get(&ordinal).map_or(&[], Vec::as_slice)
    }

    pub fn spans_removed(&self) -> u64 {
        self.losers.values().map(|v| v.len() as u64).sum()
    }
}
