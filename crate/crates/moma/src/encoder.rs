//! Text-to-vector encoding.
//!
//! Every retrieval step (category ranking, state disambiguation, agent
//! ranking) and the scoring head consume vectors from an [`Encoder`]. The
//! shipped default is a seeded character-3-gram feature-hashing encoder, so
//! the whole pipeline is deterministic with no model downloads; a real
//! embedding service can be plugged in behind the same trait.

use std::sync::Arc;

use crate::error::{Error, Result};

/// A fixed-dimension real vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    values: Vec<f64>,
}

impl Embedding {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("embedding component".into()));
        }
        Ok(Embedding { values })
    }

    pub fn zeros(dim: usize) -> Self {
        Embedding {
            values: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn dot(&self, other: &Embedding) -> Result<f64> {
        check_dims(self, other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum())
    }

    /// Squared Euclidean distance.
    pub fn sq_dist(&self, other: &Embedding) -> Result<f64> {
        check_dims(self, other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum())
    }
}

fn check_dims(u: &Embedding, v: &Embedding) -> Result<()> {
    if u.dim() != v.dim() {
        return Err(Error::Dimension(format!(
            "embedding dims {} vs {}",
            u.dim(),
            v.dim()
        )));
    }
    Ok(())
}

/// Cosine similarity in [-1, 1]; zero vectors compare as 0 so retrieval over
/// empty queries stays total.
pub fn cosine_sim(u: &Embedding, v: &Embedding) -> Result<f64> {
    check_dims(u, v)?;
    let nu = u.l2_norm();
    let nv = v.l2_norm();
    if nu == 0.0 || nv == 0.0 {
        return Ok(0.0);
    }
    let dot = u.dot(v)?;
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

/// Deterministic text encoder with a fixed output dimension.
pub trait Encoder: Send + Sync {
    fn dim(&self) -> usize;
    /// Same text must always yield the identical vector.
    fn encode(&self, text: &str) -> Embedding;
}

/// Shared encoder handle.
pub type SharedEncoder = Arc<dyn Encoder>;

/// Minimum dimension accepted by the hashing encoder.
pub const MIN_HASH_DIM: usize = 8;

/// Seeded character-3-gram feature-hashing encoder.
///
/// The lowercased text's 3-gram counts are hashed into `dim` signed buckets
/// and the result is L2-normalized. Texts with no 3-grams (empty or shorter
/// than three characters) encode to the zero vector.
#[derive(Debug, Clone)]
pub struct HashingEncoder {
    dim: usize,
    seed: u64,
}

impl HashingEncoder {
    pub const DEFAULT_DIM: usize = 256;

    pub fn new(dim: usize, seed: u64) -> Result<Self> {
        if dim < MIN_HASH_DIM {
            return Err(Error::Dimension(format!(
                "hashing encoder dim {dim} < minimum {MIN_HASH_DIM}"
            )));
        }
        Ok(HashingEncoder { dim, seed })
    }
}

/// FNV-1a over the seed bytes then the gram bytes; stable across platforms.
fn hash_gram(seed: u64, gram: &[char; 3]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    for byte in seed.to_le_bytes() {
        h = (h ^ byte as u64).wrapping_mul(PRIME);
    }
    let mut buf = [0u8; 4];
    for ch in gram {
        for byte in ch.encode_utf8(&mut buf).as_bytes() {
            h = (h ^ *byte as u64).wrapping_mul(PRIME);
        }
    }
    h
}

impl Encoder for HashingEncoder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn encode(&self, text: &str) -> Embedding {
        let chars: Vec<char> = text.to_lowercase().chars().collect();
        let mut values = vec![0.0f64; self.dim];
        if chars.len() < 3 {
            return Embedding { values };
        }
        for gram in chars.windows(3) {
            let h = hash_gram(self.seed, &[gram[0], gram[1], gram[2]]);
            let bucket = (h % self.dim as u64) as usize;
            let sign = if (h >> 63) & 1 == 0 { 1.0 } else { -1.0 };
            values[bucket] += sign;
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for v in &mut values {
                *v /= norm;
            }
        }
        Embedding { values }
    }
}
