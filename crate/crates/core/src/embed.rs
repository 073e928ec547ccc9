//! Dense vector storage, cosine similarity, and the deterministic fallback
//! embedder.
//!
//! External models never run inside this crate: their output is consumed as
//! JSON Lines embedding files (`{"id": ..., "vector": [...]}`). The fallback
//! embedder hashes index vocabulary tokens into a fixed-dimension vector so
//! the dense ranking paths stay testable without any model at all.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexindex::{tokenize, Bm25Index};

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("vector dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("duplicate embedding id `{0}`")]
    DuplicateId(String),
    #[error("zero-norm vector: {0}")]
    ZeroVector(String),
    #[error("vector for `{0}` has non-finite components")]
    NonFinite(String),
    #[error("embedding dimension must be at least 2, got {0}")]
    InvalidDim(usize),
    #[error("text has no tokens from the index vocabulary")]
    NoKnownTokens,
    #[error("embeddings line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Fixed-dimension dense vectors keyed by document id.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    vectors: BTreeMap<String, Vec<f64>>,
    provenance: String,
}

#[derive(Serialize, Deserialize)]
struct EmbeddingRecord {
    id: String,
    vector: Vec<f64>,
}

impl EmbeddingStore {
    pub fn new(dim: usize, provenance: impl Into<String>) -> Result<Self, EmbedError> {
        if dim == 0 {
            return Err(EmbedError::InvalidDim(dim));
        }
        Ok(Self {
            dim,
            vectors: BTreeMap::new(),
            provenance: provenance.into(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.vectors.get(id).map(Vec::as_slice)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.vectors.keys().map(String::as_str)
    }

    pub fn insert(&mut self, id: impl Into<String>, vector: Vec<f64>) -> Result<(), EmbedError> {
        let id = id.into();
        if vector.len() != self.dim {
            return Err(EmbedError::DimensionMismatch {
                expected: self.dim,
                found: vector.len(),
            });
        }
        if !vector.iter().all(|x| x.is_finite()) {
            return Err(EmbedError::NonFinite(id));
        }
        if vector.iter().all(|x| *x == 0.0) {
            return Err(EmbedError::ZeroVector(format!("vector for `{id}`")));
        }
        if self.vectors.contains_key(&id) {
            return Err(EmbedError::DuplicateId(id));
        }
        self.vectors.insert(id, vector);
        Ok(())
    }

    /// Reads a JSON Lines embedding file. The dimension is `expected_dim`
    /// when given, otherwise inferred from the first record.
    pub fn load<R: BufRead>(
        reader: R,
        expected_dim: Option<usize>,
        provenance: impl Into<String>,
    ) -> Result<Self, EmbedError> {
        let mut store: Option<EmbeddingStore> = None;
        let provenance = provenance.into();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let record: EmbeddingRecord =
                serde_json::from_str(&line).map_err(|e| EmbedError::Schema {
                    line: idx + 1,
                    message: e.to_string(),
                })?;
            if store.is_none() {
                let dim = expected_dim.unwrap_or(record.vector.len());
                store = Some(Self::new(dim, provenance.clone())?);
            }
            store
                .as_mut()
                .expect("store was just initialized")
                .insert(record.id, record.vector)?;
        }
        match store {
            Some(store) => Ok(store),
            // An empty file is only loadable with an explicit dimension.
            None => Self::new(expected_dim.unwrap_or(0), provenance),
        }
    }

    /// Writes the store as JSON Lines, ids ascending.
    pub fn save<W: Write>(&self, mut writer: W) -> Result<(), EmbedError> {
        for (id, vector) in &self.vectors {
            let record = EmbeddingRecord {
                id: id.clone(),
                vector: vector.clone(),
            };
            serde_json::to_writer(&mut writer, &record)
                .map_err(|e| EmbedError::Io(std::io::Error::other(e)))?;
            writer.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Cosine similarity of two same-length nonzero vectors, in double
/// precision.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64, EmbedError> {
    if u.len() != v.len() {
        return Err(EmbedError::DimensionMismatch {
            expected: u.len(),
            found: v.len(),
        });
    }
    let mut dot = 0.0;
    let mut norm_u = 0.0;
    let mut norm_v = 0.0;
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        norm_u += a * a;
        norm_v += b * b;
    }
    if norm_u == 0.0 {
        return Err(EmbedError::ZeroVector("left operand".into()));
    }
    if norm_v == 0.0 {
        return Err(EmbedError::ZeroVector("right operand".into()));
    }
    Ok(dot / (norm_u.sqrt() * norm_v.sqrt()))
}

/// Seeded FNV-1a over the token bytes with a SplitMix64-style finalizer, so
/// coordinate and sign choices are stable across platforms.
fn token_hash(token: &str, seed: u64) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325 ^ seed;
    for byte in token.bytes() {
        h ^= u64::from(byte);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h = (h ^ (h >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    h = (h ^ (h >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    h ^ (h >> 31)
}

/// Deterministic idf-weighted feature-hashing embedder.
///
/// Every occurrence of an in-vocabulary token adds its idf weight at a
/// hash-chosen coordinate with a hash-chosen sign; the result is normalized
/// to unit length. Distinct equal-idf tokens can land on one coordinate
/// with opposite signs and cancel exactly; when the whole sum cancels, the
/// accumulation deterministically retries with a derived seed. This is a
/// corpus-aware stand-in for external models, not an approximation of any
/// of them.
pub fn hashed_embedding(
    index: &Bm25Index,
    text: &str,
    dim: usize,
    seed: u64,
) -> Result<Vec<f64>, EmbedError> {
    if dim < 2 {
        return Err(EmbedError::InvalidDim(dim));
    }
    let tokens: Vec<&str> = tokenize(text)
        .into_iter()
        .filter(|t| index.idf(t).is_some())
        .collect();
    if tokens.is_empty() {
        return Err(EmbedError::NoKnownTokens);
    }
    const RESEED_ATTEMPTS: u64 = 8;
    for attempt in 0..RESEED_ATTEMPTS {
        let attempt_seed = seed ^ attempt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        let mut vector = vec![0.0; dim];
        for token in &tokens {
            let idf = index.idf(token).expect("token was filtered to be known");
            let h = token_hash(token, attempt_seed);
            let coord = (h % dim as u64) as usize;
            let sign = if h >> 63 == 1 { -1.0 } else { 1.0 };
            vector[coord] += sign * idf;
        }
        let norm = vector.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            for x in &mut vector {
                *x /= norm;
            }
            return Ok(vector);
        }
    }
    Err(EmbedError::ZeroVector(
        "hashed embedding; token contributions cancelled under every reseed".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexindex::{build_index, Bm25Params};
    use crate::testutil::toy_corpus;
    use std::io::Cursor;

    #[test]
    fn load_two_records() {
        let data = "\
{\"id\":\"a\",\"vector\":[1.0,0.0,0.0,0.5]}\n\
{\"id\":\"b\",\"vector\":[0.0,2.0,0.0,0.0]}\n";
        let store = EmbeddingStore::load(Cursor::new(data), None, "test").unwrap();
        assert_eq!(store.len(), 2);
        assert_eq!(store.dim(), 4);
        assert_eq!(store.get("a").unwrap(), &[1.0, 0.0, 0.0, 0.5]);
    }

    #[test]
    fn load_rejects_mixed_dimensions() {
        let data = "\
{\"id\":\"a\",\"vector\":[1.0,0.0,0.0,0.5]}\n\
{\"id\":\"b\",\"vector\":[0.0,2.0,0.0,0.0,9.0]}\n";
        assert!(matches!(
            EmbeddingStore::load(Cursor::new(data), None, "test"),
            Err(EmbedError::DimensionMismatch {
                expected: 4,
                found: 5
            })
        ));
    }

    #[test]
    fn load_rejects_zero_vectors() {
        let data = "{\"id\":\"a\",\"vector\":[0.0,0.0]}\n";
        assert!(matches!(
            EmbeddingStore::load(Cursor::new(data), None, "test"),
            Err(EmbedError::ZeroVector(_))
        ));
    }

    #[test]
    fn load_rejects_duplicates() {
        let data = "\
{\"id\":\"a\",\"vector\":[1.0,0.0]}\n\
{\"id\":\"a\",\"vector\":[0.0,1.0]}\n";
        assert!(matches!(
            EmbeddingStore::load(Cursor::new(data), None, "test"),
            Err(EmbedError::DuplicateId(_))
        ));
    }

    #[test]
    fn load_rejects_malformed_records() {
        let data = "{\"id\":\"a\"}\n";
        assert!(matches!(
            EmbeddingStore::load(Cursor::new(data), None, "test"),
            Err(EmbedError::Schema { line: 1, .. })
        ));
    }

    #[test]
    fn load_enforces_expected_dim() {
        let data = "{\"id\":\"a\",\"vector\":[1.0,0.0]}\n";
        assert!(matches!(
            EmbeddingStore::load(Cursor::new(data), Some(3), "test"),
            Err(EmbedError::DimensionMismatch {
                expected: 3,
                found: 2
            })
        ));
    }

    #[test]
    fn save_round_trips() {
        let data = "\
{\"id\":\"a\",\"vector\":[0.25,-1.5,3.0]}\n\
{\"id\":\"b\",\"vector\":[0.1,0.2,0.30000000000000004]}\n";
        let store = EmbeddingStore::load(Cursor::new(data), None, "test").unwrap();
        let mut buf = Vec::new();
        store.save(&mut buf).unwrap();
        let reloaded = EmbeddingStore::load(Cursor::new(&buf), None, "test").unwrap();
        assert_eq!(store, reloaded);
    }

    #[test]
    fn cosine_basics() {
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        let v = [0.3, -0.4, 1.2];
        assert!((cosine(&v, &v).unwrap() - 1.0).abs() < 1e-12);
        assert!((cosine(&[1.0, 2.0], &[2.0, 4.0]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cosine_error_cases() {
        assert!(matches!(
            cosine(&[1.0], &[1.0, 2.0]),
            Err(EmbedError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            cosine(&[0.0, 0.0], &[1.0, 2.0]),
            Err(EmbedError::ZeroVector(_))
        ));
    }

    #[test]
    fn hashed_embedding_is_deterministic_and_unit_norm() {
        let index = build_index(&toy_corpus(), Bm25Params::default()).unwrap();
        let a = hashed_embedding(&index, "legal citation law", 16, 7).unwrap();
        let b = hashed_embedding(&index, "legal citation law", 16, 7).unwrap();
        assert_eq!(a, b);
        let norm: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-9);
        // A different seed gives a different placement.
        let c = hashed_embedding(&index, "legal citation law", 16, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn hashed_embedding_requires_known_tokens() {
        let index = build_index(&toy_corpus(), Bm25Params::default()).unwrap();
        assert!(matches!(
            hashed_embedding(&index, "unrelated words entirely", 16, 7),
            Err(EmbedError::NoKnownTokens)
        ));
    }

    #[test]
    fn hashed_embedding_needs_dim_two() {
        let index = build_index(&toy_corpus(), Bm25Params::default()).unwrap();
        assert!(matches!(
            hashed_embedding(&index, "legal", 1, 7),
            Err(EmbedError::InvalidDim(1))
        ));
    }
}
