//! Persisted dedup state.
//!
//! Layout, all integers little-endian:
//!
//! | field          | size        |
//! |----------------|-------------|
//! | magic          | 8 bytes     |
//! | version        | u32         |
//! | algorithm id   | u32         |
//! | seed           | u64         |
//! | spans_seen     | u64         |
//! | spans_removed  | u64         |
//! | digest count   | u64         |
//! | digests        | count × u128, ascending |
//! | checksum       | u64, xxh3-64 of everything above |

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use thiserror::Error;
use xxhash_rust::xxh3::xxh3_64;

use super::{DedupState, SpanDigest, DIGEST_SEED};

pub const STATE_MAGIC: &[u8; 8] = b"C5DDSTAT";
pub const STATE_VERSION: u32 = 1;
/// xxh3-128 over the blank-stripped concatenation of four sentences.
pub const DIGEST_ALGORITHM_ID: u32 = 1;

const HEADER_LEN: usize = 8 + 4 + 4 + 8 * 4;

#[derive(Debug, Error)]
pub enum StateError {
    #[error("dedup state is corrupt ({0}); start a fresh run")]
    StateCorrupt(&'static str),
    #[error("dedup state was written with {what} {found}, expected {expected}")]
    Incompatible {
        what: &'static str,
        found: u64,
        expected: u64,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn u64_at(bytes: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(bytes[at..at + 8].try_into().unwrap())
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap())
}

impl DedupState {
    pub fn to_bytes(&self) -> Vec<u8> {
        let digests = self.sorted_digests();
        let mut out = Vec::with_capacity(HEADER_LEN + digests.len() * 16 + 8);
        out.extend_from_slice(STATE_MAGIC);
        out.extend_from_slice(&STATE_VERSION.to_le_bytes());
        out.extend_from_slice(&DIGEST_ALGORITHM_ID.to_le_bytes());
        out.extend_from_slice(&DIGEST_SEED.to_le_bytes());
        out.extend_from_slice(&self.spans_seen.to_le_bytes());
        out.extend_from_slice(&self.spans_removed.to_le_bytes());
        out.extend_from_slice(&(digests.len() as u64).to_le_bytes());
        for d in &digests {
            out.extend_from_slice(&d.0.to_le_bytes());
        }
        let checksum = xxh3_64(&out);
        out.extend_from_slice(&checksum.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, StateError> {
        if bytes.len() < HEADER_LEN + 8 {
            return Err(StateError::StateCorrupt("file too short"));
        }
        let (body, tail) = bytes.split_at(bytes.len() - 8);
        if xxh3_64(body) != u64_at(tail, 0) {
            return Err(StateError::StateCorrupt("checksum mismatch"));
        }
        if &body[..8] != STATE_MAGIC {
            return Err(StateError::StateCorrupt("bad magic"));
        }
        let version = u32_at(body, 8);
        if version != STATE_VERSION {
            return Err(StateError::Incompatible {
                what: "version",
                found: version.into(),
                expected: STATE_VERSION.into(),
            });
        }
        let algorithm = u32_at(body, 12);
        if algorithm != DIGEST_ALGORITHM_ID {
            return Err(StateError::Incompatible {
                what: "digest algorithm",
                found: algorithm.into(),
                expected: DIGEST_ALGORITHM_ID.into(),
            });
        }
        let seed = u64_at(body, 16);
        if seed != DIGEST_SEED {
            return Err(StateError::Incompatible {
                what: "seed",
                found: seed,
                expected: DIGEST_SEED,
            });
        }
        let spans_seen = u64_at(body, 24);
        let spans_removed = u64_at(body, 32);
        let count = u64_at(body, 40) as usize;
        let payload = &body[HEADER_LEN..];
        if payload.len()
            != count
                .checked_mul(16)
                .ok_or(StateError::StateCorrupt("count overflow"))?
        {
            return Err(StateError::StateCorrupt(
                "digest count does not match length",
            ));
        }
        let mut state = DedupState {
            spans_seen,
            spans_removed,
            ..DedupState::default()
        };
        state.seen.reserve(count);
        let mut prev: Option<u128> = None;
        for chunk in payload.chunks_exact(16) {
            let d = u128::from_le_bytes(chunk.try_into().unwrap());
            if prev.is_some_and(|p| p >= d) {
                return Err(StateError::StateCorrupt("digests not strictly ascending"));
            }
            prev = Some(d);
            state.seen.insert(SpanDigest(d));
        }
        if spans_removed > spans_seen {
            return Err(StateError::StateCorrupt("spans_removed exceeds spans_seen"));
        }
        Ok(state)
    }

    pub fn save(&self, path: &Path) -> Result<(), StateError> {
        let mut f = io::BufWriter::new(fs::File::create(path)?);
        f.write_all(&self.to_bytes())?;
        f.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, StateError> {
        Self::from_bytes(&fs::read(path)?)
    }
}
