//! Tokenization, BM25+ inverted index construction, scoring, and top-k
//! pre-fetching over candidate abstracts.
//!
//! Scoring follows the BM25+ variant: with `tf` the term frequency in
//! document `D`, `|D|` its token count, and `idf(q) = ln((N + 1) / df(q))`,
//! each query token `q` found in the vocabulary contributes
//!
//! ```text
//! idf(q) * ( delta + tf * (k1 + 1) / (k1 * (1 - b + b * |D| / avgdl) + tf) )
//! ```
//!
//! so a document that lacks `q` entirely still receives the lower-bound
//! bonus `delta * idf(q)`. Query tokens absent from the vocabulary
//! contribute nothing; query tokens are scored with multiplicity.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;

const INDEX_MAGIC: &str = "lexcite.bm25";
const INDEX_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("corpus has no candidate documents to index")]
    EmptyCandidatePool,
    #[error("candidate abstracts contain no indexable tokens")]
    NoTokens,
    #[error("invalid BM25 parameters: {0}")]
    InvalidParams(String),
    #[error("document `{0}` is not in the index")]
    UnknownDocument(String),
    #[error("query has no tokens")]
    EmptyQuery,
    #[error("index file is invalid: {0}")]
    BadFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// BM25+ scoring parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    /// Term-frequency saturation.
    pub k1: f64,
    /// Length normalization strength, in `[0, 1]`.
    pub b: f64,
    /// BM25+ lower-bound bonus per matched vocabulary term.
    pub delta: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self {
            k1: 1.5,
            b: 0.75,
            delta: 1.0,
        }
    }
}

impl Bm25Params {
    pub fn validate(&self) -> Result<(), IndexError> {
        if !self.k1.is_finite() || self.k1 < 0.0 {
            return Err(IndexError::InvalidParams(format!(
                "k1 must be finite and >= 0, got {}",
                self.k1
            )));
        }
        if !self.b.is_finite() || !(0.0..=1.0).contains(&self.b) {
            return Err(IndexError::InvalidParams(format!(
                "b must lie in [0, 1], got {}",
                self.b
            )));
        }
        if !self.delta.is_finite() || self.delta < 0.0 {
            return Err(IndexError::InvalidParams(format!(
                "delta must be finite and >= 0, got {}",
                self.delta
            )));
        }
        Ok(())
    }
}

/// One scored document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredDoc {
    pub doc_id: String,
    pub score: f64,
}

/// A ranking for one query: scores non-increasing, ties broken by doc id
/// ascending, no duplicate ids.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    pub query_id: String,
    pub entries: Vec<ScoredDoc>,
}

impl RankedList {
    /// Sorts entries into ranking order (score descending, doc id ascending
    /// on ties).
    pub fn from_unsorted(query_id: impl Into<String>, mut entries: Vec<ScoredDoc>) -> Self {
        entries.sort_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then_with(|| a.doc_id.cmp(&b.doc_id))
        });
        debug_assert!(
            {
                let mut ids: Vec<&str> = entries.iter().map(|e| e.doc_id.as_str()).collect();
                ids.sort_unstable();
                ids.windows(2).all(|w| w[0] != w[1])
            },
            "ranked list contains duplicate doc ids"
        );
        Self {
            query_id: query_id.into(),
            entries,
        }
    }

    pub fn truncated(mut self, k: usize) -> Self {
        self.entries.truncate(k);
        self
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.doc_id.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Maximal runs of ASCII alphanumeric characters, in input order.
pub fn tokenize(text: &str) -> Vec<&str> {
    text.split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|t| !t.is_empty())
        .collect()
}

/// Inverted BM25+ index over the candidate abstracts of a corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct Bm25Index {
    params: Bm25Params,
    n: usize,
    avgdl: f64,
    doc_len: BTreeMap<String, usize>,
    /// term -> postings sorted by doc id ascending
    postings: BTreeMap<String, Vec<(String, u32)>>,
    /// term -> ln((N + 1) / df), derived from the postings
    idf: BTreeMap<String, f64>,
}

impl Bm25Index {
    pub fn params(&self) -> Bm25Params {
        self.params
    }

    /// Number of indexed candidate documents.
    pub fn n_documents(&self) -> usize {
        self.n
    }

    pub fn avgdl(&self) -> f64 {
        self.avgdl
    }

    pub fn doc_len(&self, doc_id: &str) -> Option<usize> {
        self.doc_len.get(doc_id).copied()
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = &str> {
        self.doc_len.keys().map(String::as_str)
    }

    pub fn contains_doc(&self, doc_id: &str) -> bool {
        self.doc_len.contains_key(doc_id)
    }

    pub fn df(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    pub fn idf(&self, term: &str) -> Option<f64> {
        self.idf.get(term).copied()
    }

    pub fn vocabulary(&self) -> impl Iterator<Item = &str> {
        self.postings.keys().map(String::as_str)
    }

    fn length_norm(&self, doc_len: usize) -> f64 {
        self.params.k1 * (1.0 - self.params.b + self.params.b * doc_len as f64 / self.avgdl)
    }

    /// Saturating term gain for a nonzero term frequency.
    fn term_gain(&self, tf: u32, norm: f64) -> f64 {
        let tf = f64::from(tf);
        tf * (self.params.k1 + 1.0) / (norm + tf)
    }

    fn tf(&self, term: &str, doc_id: &str) -> u32 {
        self.postings.get(term).map_or(0, |postings| {
            postings
                .binary_search_by(|(id, _)| id.as_str().cmp(doc_id))
                .map_or(0, |i| postings[i].1)
        })
    }

    /// BM25+ score of one document for the given query tokens.
    ///
    /// The lower-bound part (`delta * idf`) and the term-frequency part are
    /// accumulated separately and added at the end; [`Bm25Index::prefetch_topk`]
    /// accumulates the same quantities in the same order, so both paths
    /// produce bit-identical scores.
    pub fn score(&self, query_tokens: &[&str], doc_id: &str) -> Result<f64, IndexError> {
        let len = self
            .doc_len
            .get(doc_id)
            .copied()
            .ok_or_else(|| IndexError::UnknownDocument(doc_id.to_string()))?;
        let norm = self.length_norm(len);
        let mut base = 0.0;
        let mut gains = 0.0;
        for token in query_tokens {
            let Some(&idf) = self.idf.get(*token) else {
                continue;
            };
            base += idf * self.params.delta;
            let tf = self.tf(token, doc_id);
            if tf > 0 {
                gains += idf * self.term_gain(tf, norm);
            }
        }
        Ok(base + gains)
    }

    /// The `k` highest-scoring indexed documents for the query (all of them
    /// when fewer than `k` are indexed), walking postings lists instead of
    /// scoring documents one by one.
    pub fn prefetch_topk(
        &self,
        query_id: &str,
        query_tokens: &[&str],
        k: usize,
    ) -> Result<RankedList, IndexError> {
        assert!(k >= 1, "k must be at least 1");
        if query_tokens.is_empty() {
            return Err(IndexError::EmptyQuery);
        }
        let norms: HashMap<&str, f64> = self
            .doc_len
            .iter()
            .map(|(id, &len)| (id.as_str(), self.length_norm(len)))
            .collect();
        let mut base = 0.0;
        let mut gains: HashMap<&str, f64> = HashMap::new();
        for token in query_tokens {
            let Some(&idf) = self.idf.get(*token) else {
                continue;
            };
            base += idf * self.params.delta;
            for (doc_id, tf) in &self.postings[*token] {
                *gains.entry(doc_id.as_str()).or_insert(0.0) +=
                    idf * self.term_gain(*tf, norms[doc_id.as_str()]);
            }
        }
        let entries = self
            .doc_len
            .keys()
            .map(|id| ScoredDoc {
                doc_id: id.clone(),
                score: base + gains.get(id.as_str()).copied().unwrap_or(0.0),
            })
            .collect();
        Ok(RankedList::from_unsorted(query_id, entries).truncated(k))
    }

    /// Serializes the index as a versioned JSON artifact. Rebuilding from the
    /// same corpus and parameters yields byte-identical output.
    pub fn save<W: Write>(&self, mut writer: W) -> Result<(), IndexError> {
        let file = IndexFile {
            magic: INDEX_MAGIC.to_string(),
            version: INDEX_VERSION,
            params: self.params,
            n: self.n,
            avgdl: self.avgdl,
            doc_len: &self.doc_len,
            postings: &self.postings,
        };
        serde_json::to_writer(&mut writer, &file)
            .map_err(|e| IndexError::Io(std::io::Error::other(e)))?;
        writer.write_all(b"\n")?;
        Ok(())
    }

    /// Loads an index saved by [`Bm25Index::save`], revalidating its
    /// invariants and rederiving the idf table.
    pub fn load<R: Read>(reader: R) -> Result<Self, IndexError> {
        let file: OwnedIndexFile =
            serde_json::from_reader(reader).map_err(|e| IndexError::BadFormat(e.to_string()))?;
        if file.magic != INDEX_MAGIC {
            return Err(IndexError::BadFormat(format!("bad magic `{}`", file.magic)));
        }
        if file.version != INDEX_VERSION {
            return Err(IndexError::BadFormat(format!(
                "unsupported version {}",
                file.version
            )));
        }
        file.params.validate()?;
        if file.n != file.doc_len.len() {
            return Err(IndexError::BadFormat(format!(
                "N = {} but {} document lengths are stored",
                file.n,
                file.doc_len.len()
            )));
        }
        if file.n == 0 {
            return Err(IndexError::EmptyCandidatePool);
        }
        let recomputed = file.doc_len.values().sum::<usize>() as f64 / file.n as f64;
        if recomputed != file.avgdl {
            return Err(IndexError::BadFormat(format!(
                "stored avgdl {} does not match recomputed {}",
                file.avgdl, recomputed
            )));
        }
        if file.avgdl <= 0.0 {
            return Err(IndexError::NoTokens);
        }
        for (term, postings) in &file.postings {
            if postings.is_empty() || postings.len() > file.n {
                return Err(IndexError::BadFormat(format!(
                    "term `{term}` has df {} outside 1..=N",
                    postings.len()
                )));
            }
            for window in postings.windows(2) {
                if window[0].0 >= window[1].0 {
                    return Err(IndexError::BadFormat(format!(
                        "postings for `{term}` are not sorted by doc id"
                    )));
                }
            }
            for (doc_id, tf) in postings {
                if !file.doc_len.contains_key(doc_id) {
                    return Err(IndexError::BadFormat(format!(
                        "postings for `{term}` reference unknown document `{doc_id}`"
                    )));
                }
                if *tf == 0 {
                    return Err(IndexError::BadFormat(format!(
                        "postings for `{term}` store a zero term frequency"
                    )));
                }
            }
        }
        let idf = derive_idf(&file.postings, file.n);
        Ok(Self {
            params: file.params,
            n: file.n,
            avgdl: file.avgdl,
            doc_len: file.doc_len,
            postings: file.postings,
            idf,
        })
    }
}

fn derive_idf(postings: &BTreeMap<String, Vec<(String, u32)>>, n: usize) -> BTreeMap<String, f64> {
    postings
        .iter()
        .map(|(term, p)| (term.clone(), ((n as f64 + 1.0) / p.len() as f64).ln()))
        .collect()
}

#[derive(Serialize)]
struct IndexFile<'a> {
    magic: String,
    version: u32,
    params: Bm25Params,
    n: usize,
    avgdl: f64,
    doc_len: &'a BTreeMap<String, usize>,
    postings: &'a BTreeMap<String, Vec<(String, u32)>>,
}

#[derive(Deserialize)]
struct OwnedIndexFile {
    magic: String,
    version: u32,
    params: Bm25Params,
    n: usize,
    avgdl: f64,
    doc_len: BTreeMap<String, usize>,
    postings: BTreeMap<String, Vec<(String, u32)>>,
}

/// Builds the inverted index over the corpus's candidate abstracts.
pub fn build_index(corpus: &Corpus, params: Bm25Params) -> Result<Bm25Index, IndexError> {
    params.validate()?;
    let mut doc_len = BTreeMap::new();
    let mut postings: BTreeMap<String, Vec<(String, u32)>> = BTreeMap::new();
    // Corpus iteration is id-ordered, so postings lists come out sorted.
    for doc in corpus.candidates() {
        let tokens = tokenize(&doc.abstract_text);
        doc_len.insert(doc.id.clone(), tokens.len());
        let mut tf: BTreeMap<&str, u32> = BTreeMap::new();
        for token in tokens {
            *tf.entry(token).or_insert(0) += 1;
        }
        for (term, count) in tf {
            postings
                .entry(term.to_string())
                .or_default()
                .push((doc.id.clone(), count));
        }
    }
    let n = doc_len.len();
    if n == 0 {
        return Err(IndexError::EmptyCandidatePool);
    }
    let avgdl = doc_len.values().sum::<usize>() as f64 / n as f64;
    if avgdl <= 0.0 {
        return Err(IndexError::NoTokens);
    }
    let idf = derive_idf(&postings, n);
    Ok(Bm25Index {
        params,
        n,
        avgdl,
        doc_len,
        postings,
        idf,
    })
}
