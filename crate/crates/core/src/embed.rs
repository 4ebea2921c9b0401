//! Deterministic feature-hashing text embedder.
//!
//! Character trigrams and whole words of the lowercased text are hashed with a
//! seeded FNV-1a/splitmix hash into `dim` signed buckets, then L2-normalized.
//! Texts that share many n-grams land close together in cosine terms, which is
//! all the matching and clustering code needs from an embedding.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::{linalg, CoreError, Result};

pub const DEFAULT_DIM: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NgramEmbedder {
    dim: usize,
    seed: u64,
}

impl Default for NgramEmbedder {
    fn default() -> Self {
        Self::new(DEFAULT_DIM, 0)
    }
}

impl NgramEmbedder {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        Self { dim, seed }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn embed(&self, text: &str) -> Result<Vec<f64>> {
        let words: Vec<String> = text.split_whitespace().map(|w| w.to_lowercase()).collect();
        if words.is_empty() {
            return Err(CoreError::EmptyText);
        }
        let mut v = vec![0.0; self.dim];

        let mut padded = String::from(" ");
        for w in &words {
            padded.push_str(w);
            padded.push(' ');
        }
        let chars: Vec<char> = padded.chars().collect();
        let mut buf = String::new();
        for gram in chars.windows(3) {
            buf.clear();
            buf.extend(gram.iter());
            self.add(&mut v, b'c', buf.as_bytes());
        }
        for w in &words {
            self.add(&mut v, b'w', w.as_bytes());
        }

        if !linalg::normalize(&mut v) {
            // Every feature cancelled out; fall back to a single hashed bucket.
            let h = self.hash(b'f', padded.as_bytes());
            v[(h % self.dim as u64) as usize] = 1.0;
        }
        Ok(v)
    }

    fn add(&self, v: &mut [f64], kind: u8, bytes: &[u8]) {
        let h = self.hash(kind, bytes);
        let bucket = (h % self.dim as u64) as usize;
        let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
        v[bucket] += sign;
    }

    fn hash(&self, kind: u8, bytes: &[u8]) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ self.seed;
        for &b in core::iter::once(&kind).chain(bytes) {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        // splitmix64 finalizer spreads low-entropy FNV output over all bits
        h ^= h >> 30;
        h = h.wrapping_mul(0xbf58_476d_1ce4_e5b9);
        h ^= h >> 27;
        h = h.wrapping_mul(0x94d0_49bb_1331_11eb);
        h ^ (h >> 31)
    }
}
