//! (anchor, positive, negative) training-triplet generation and export for
//! external fine-tuning.
//!
//! Anchors are train-split queries only; positives are documents the anchor
//! cites; negatives are candidates it does not cite, drawn either uniformly
//! at random (seeded) or as the highest-BM25-ranked non-cited candidates.

use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::corpus::{Corpus, SplitSpec};
use crate::lexindex::{tokenize, Bm25Index, IndexError};
use crate::rng::SplitMix64;

#[derive(Debug, Error)]
pub enum TripletError {
    #[error(
        "query `{query}` has {available} non-cited candidates, \
         fewer than the {requested} negatives requested"
    )]
    NoNegativesAvailable {
        query: String,
        available: usize,
        requested: usize,
    },
    #[error("strategy bm25_hard requires an index")]
    MissingIndex,
    #[error("triplet references unknown document `{0}`")]
    UnknownId(String),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// How negatives are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingStrategy {
    /// Uniform seeded draw from the non-cited candidates.
    Random,
    /// Highest-BM25-ranked non-cited candidates for the anchor's abstract.
    Bm25Hard,
}

/// One training example: the anchor cites the positive, not the negative.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Triplet {
    pub anchor_id: String,
    pub positive_id: String,
    pub negative_id: String,
}

#[derive(Serialize)]
struct TripletRecord<'a> {
    anchor: &'a str,
    positive: &'a str,
    negative: &'a str,
    anchor_id: &'a str,
    positive_id: &'a str,
    negative_id: &'a str,
}

/// Emits `negatives_per_positive` triplets for every (train query, cited
/// document) pair, deterministically for fixed inputs. The output is sorted
/// by (anchor, positive, negative).
pub fn sample_triplets(
    corpus: &Corpus,
    split: &SplitSpec,
    strategy: SamplingStrategy,
    negatives_per_positive: usize,
    seed: u64,
    index: Option<&Bm25Index>,
) -> Result<Vec<Triplet>, TripletError> {
    assert!(
        negatives_per_positive >= 1,
        "negatives_per_positive must be at least 1"
    );
    if strategy == SamplingStrategy::Bm25Hard && index.is_none() {
        return Err(TripletError::MissingIndex);
    }
    let candidate_ids: Vec<&str> = corpus.candidates().map(|d| d.id.as_str()).collect();
    let mut rng = SplitMix64::new(seed);
    let mut triplets = Vec::new();
    // Train ids iterate in sorted order, keeping the RNG stream stable.
    for anchor_id in &split.train {
        let Some(cited) = corpus.graph().cited_by(anchor_id) else {
            continue;
        };
        let pool: Vec<&str> = candidate_ids
            .iter()
            .copied()
            .filter(|id| !cited.contains(*id))
            .collect();
        if pool.len() < negatives_per_positive {
            return Err(TripletError::NoNegativesAvailable {
                query: anchor_id.clone(),
                available: pool.len(),
                requested: negatives_per_positive,
            });
        }
        let hard_negatives = match strategy {
            SamplingStrategy::Random => None,
            SamplingStrategy::Bm25Hard => {
                let index = index.expect("checked above");
                let anchor = corpus
                    .document(anchor_id)
                    .ok_or_else(|| TripletError::UnknownId(anchor_id.clone()))?;
                let tokens = tokenize(&anchor.abstract_text);
                let ranked = index.prefetch_topk(anchor_id, &tokens, index.n_documents())?;
                let negatives: Vec<String> = ranked
                    .doc_ids()
                    .filter(|id| !cited.contains(*id))
                    .take(negatives_per_positive)
                    .map(str::to_string)
                    .collect();
                if negatives.len() < negatives_per_positive {
                    // The index can be smaller than the candidate pool; treat
                    // a short hard-negative list the same as a short pool.
                    return Err(TripletError::NoNegativesAvailable {
                        query: anchor_id.clone(),
                        available: negatives.len(),
                        requested: negatives_per_positive,
                    });
                }
                Some(negatives)
            }
        };
        for positive_id in cited {
            match &hard_negatives {
                Some(negatives) => {
                    for negative_id in negatives {
                        triplets.push(Triplet {
                            anchor_id: anchor_id.clone(),
                            positive_id: positive_id.clone(),
                            negative_id: negative_id.clone(),
                        });
                    }
                }
                None => {
                    // Partial Fisher-Yates over a scratch copy of the pool
                    // draws distinct negatives uniformly.
                    let mut scratch = pool.clone();
                    for i in 0..negatives_per_positive {
                        let j = i + rng.next_below((scratch.len() - i) as u64) as usize;
                        scratch.swap(i, j);
                        triplets.push(Triplet {
                            anchor_id: anchor_id.clone(),
                            positive_id: positive_id.clone(),
                            negative_id: scratch[i].to_string(),
                        });
                    }
                }
            }
        }
    }
    triplets.sort_unstable();
    debug_assert!(triplets.iter().all(|t| {
        corpus.graph().contains(&t.anchor_id, &t.positive_id)
            && !corpus.graph().contains(&t.anchor_id, &t.negative_id)
            && t.positive_id != t.negative_id
    }));
    Ok(triplets)
}

/// Writes one JSON Lines record per triplet with resolved abstract texts.
/// Returns the number of records written.
pub fn export_triplets<W: Write>(
    triplets: &[Triplet],
    corpus: &Corpus,
    mut writer: W,
) -> Result<usize, TripletError> {
    let mut written = 0usize;
    for triplet in triplets {
        let resolve = |id: &str| {
            corpus
                .document(id)
                .map(|d| d.abstract_text.as_str())
                .ok_or_else(|| TripletError::UnknownId(id.to_string()))
        };
        let record = TripletRecord {
            anchor: resolve(&triplet.anchor_id)?,
            positive: resolve(&triplet.positive_id)?,
            negative: resolve(&triplet.negative_id)?,
            anchor_id: &triplet.anchor_id,
            positive_id: &triplet.positive_id,
            negative_id: &triplet.negative_id,
        };
        serde_json::to_writer(&mut writer, &record)
            .map_err(|e| TripletError::Io(std::io::Error::other(e)))?;
        writer.write_all(b"\n")?;
        written += 1;
    }
    Ok(written)
}
