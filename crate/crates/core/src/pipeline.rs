//! Orchestration of the experimental setups: lexical-only ranking, dense
//! ranking over the full candidate pool, and BM25+ pre-fetching followed by
//! cosine re-ranking.
//!
//! The pre-trained vs. fine-tuned axis is carried entirely by which
//! embedding files are supplied; the code paths are the same.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, SplitSpec};
use crate::embed::{cosine, EmbedError, EmbeddingStore};
use crate::lexindex::{tokenize, Bm25Index, IndexError, RankedList, ScoredDoc};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid setup configuration: {0}")]
    Config(String),
    #[error("no embedding stored for document `{0}`")]
    MissingEmbedding(String),
    #[error("split references unknown query document `{0}`")]
    UnknownQuery(String),
    #[error("run file is invalid: {0}")]
    BadFormat(String),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Which ranking strategy a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Bm25Only,
    DenseFull,
    PrefetchRerank,
}

impl Mode {
    pub fn needs_embeddings(self) -> bool {
        !matches!(self, Mode::Bm25Only)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Bm25Only => "bm25_only",
            Mode::DenseFull => "dense_full",
            Mode::PrefetchRerank => "prefetch_rerank",
        }
    }
}

/// A document-store / query-store pair sharing one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSource {
    documents: EmbeddingStore,
    queries: EmbeddingStore,
}

impl EmbeddingSource {
    pub fn new(documents: EmbeddingStore, queries: EmbeddingStore) -> Result<Self, EmbedError> {
        if documents.dim() != queries.dim() {
            return Err(EmbedError::DimensionMismatch {
                expected: documents.dim(),
                found: queries.dim(),
            });
        }
        Ok(Self { documents, queries })
    }

    pub fn documents(&self) -> &EmbeddingStore {
        &self.documents
    }

    pub fn queries(&self) -> &EmbeddingStore {
        &self.queries
    }
}

/// Configuration for one run.
#[derive(Debug, Clone, Copy)]
pub struct SetupConfig<'a> {
    pub mode: Mode,
    /// Ranking cutoff (and evaluation cutoff downstream).
    pub k: usize,
    /// First-stage depth for `prefetch_rerank`.
    pub prefetch_k: usize,
    pub embeddings: Option<&'a EmbeddingSource>,
}

impl<'a> SetupConfig<'a> {
    pub fn bm25_only(k: usize) -> Self {
        Self {
            mode: Mode::Bm25Only,
            k,
            prefetch_k: k.max(10),
            embeddings: None,
        }
    }

    pub fn dense_full(k: usize, embeddings: &'a EmbeddingSource) -> Self {
        Self {
            mode: Mode::DenseFull,
            k,
            prefetch_k: k.max(10),
            embeddings: Some(embeddings),
        }
    }

    pub fn prefetch_rerank(k: usize, prefetch_k: usize, embeddings: &'a EmbeddingSource) -> Self {
        Self {
            mode: Mode::PrefetchRerank,
            k,
            prefetch_k,
            embeddings: Some(embeddings),
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.k == 0 {
            return Err(PipelineError::Config("k must be at least 1".into()));
        }
        if self.prefetch_k < self.k {
            return Err(PipelineError::Config(format!(
                "prefetch_k ({}) must be at least k ({})",
                self.prefetch_k, self.k
            )));
        }
        if self.mode.needs_embeddings() && self.embeddings.is_none() {
            return Err(PipelineError::Config(format!(
                "mode {} requires an embedding source",
                self.mode.as_str()
            )));
        }
        Ok(())
    }

    fn echo(&self) -> RunConfig {
        RunConfig {
            mode: self.mode,
            k: self.k,
            prefetch_k: self.prefetch_k,
            embedding_source: self.embeddings.map(|e| EmbeddingLabels {
                documents: e.documents.provenance().to_string(),
                queries: e.queries.provenance().to_string(),
            }),
        }
    }
}

/// Provenance labels of the embedding files behind a run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingLabels {
    pub documents: String,
    pub queries: String,
}

/// Serializable echo of the configuration a run was produced with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub mode: Mode,
    pub k: usize,
    pub prefetch_k: usize,
    pub embedding_source: Option<EmbeddingLabels>,
}

/// Rankings for every query of the evaluated split.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub config: RunConfig,
    pub rankings: BTreeMap<String, RankedList>,
}

#[derive(Serialize, Deserialize)]
struct RunFile {
    config: RunConfig,
    rankings: BTreeMap<String, Vec<ScoredDoc>>,
}

impl RunResult {
    pub fn save<W: Write>(&self, mut writer: W) -> Result<(), PipelineError> {
        let file = RunFile {
            config: self.config.clone(),
            rankings: self
                .rankings
                .iter()
                .map(|(id, list)| (id.clone(), list.entries.clone()))
                .collect(),
        };
        serde_json::to_writer(&mut writer, &file)
            .map_err(|e| PipelineError::Io(std::io::Error::other(e)))?;
        writer.write_all(b"\n")?;
        Ok(())
    }

    pub fn load<R: Read>(reader: R) -> Result<Self, PipelineError> {
        let file: RunFile =
            serde_json::from_reader(reader).map_err(|e| PipelineError::BadFormat(e.to_string()))?;
        let mut rankings = BTreeMap::new();
        for (query_id, entries) in file.rankings {
            for pair in entries.windows(2) {
                let ordered = pair[0].score > pair[1].score
                    || (pair[0].score == pair[1].score && pair[0].doc_id < pair[1].doc_id);
                if !ordered {
                    return Err(PipelineError::BadFormat(format!(
                        "ranking for `{query_id}` is not in ranked order"
                    )));
                }
            }
            rankings.insert(query_id.clone(), RankedList { query_id, entries });
        }
        Ok(Self {
            config: file.config,
            rankings,
        })
    }
}

/// Ranks `candidate_ids` by cosine similarity to `query_vector` and keeps the
/// top `k`.
pub fn rank_dense<'c, I>(
    doc_store: &EmbeddingStore,
    query_id: &str,
    query_vector: &[f64],
    candidate_ids: I,
    k: usize,
) -> Result<RankedList, PipelineError>
where
    I: IntoIterator<Item = &'c str>,
{
    if query_vector.len() != doc_store.dim() {
        return Err(PipelineError::Embed(EmbedError::DimensionMismatch {
            expected: doc_store.dim(),
            found: query_vector.len(),
        }));
    }
    let mut entries = Vec::new();
    for id in candidate_ids {
        let vector = doc_store
            .get(id)
            .ok_or_else(|| PipelineError::MissingEmbedding(id.to_string()))?;
        entries.push(ScoredDoc {
            doc_id: id.to_string(),
            score: cosine(query_vector, vector)?,
        });
    }
    Ok(RankedList::from_unsorted(query_id, entries).truncated(k))
}

/// Reorders a pre-fetched list by cosine similarity. The output contains
/// exactly the same document ids as the input; only order and scores change.
pub fn rerank(
    prefetched: &RankedList,
    doc_store: &EmbeddingStore,
    query_vector: &[f64],
) -> Result<RankedList, PipelineError> {
    let mut entries = Vec::with_capacity(prefetched.len());
    for entry in &prefetched.entries {
        let vector = doc_store
            .get(&entry.doc_id)
            .ok_or_else(|| PipelineError::MissingEmbedding(entry.doc_id.clone()))?;
        entries.push(ScoredDoc {
            doc_id: entry.doc_id.clone(),
            score: cosine(query_vector, vector)?,
        });
    }
    Ok(RankedList::from_unsorted(&*prefetched.query_id, entries))
}

fn query_vector<'s>(
    source: &'s EmbeddingSource,
    query_id: &str,
) -> Result<&'s [f64], PipelineError> {
    source
        .queries()
        .get(query_id)
        .ok_or_else(|| PipelineError::MissingEmbedding(query_id.to_string()))
}

/// Runs one setup over the test queries of the split.
pub fn run_setup(
    corpus: &Corpus,
    split: &SplitSpec,
    index: &Bm25Index,
    config: &SetupConfig<'_>,
) -> Result<RunResult, PipelineError> {
    config.validate()?;
    let candidate_ids: Vec<&str> = corpus.candidates().map(|d| d.id.as_str()).collect();
    let mut rankings = BTreeMap::new();
    for query_id in &split.test {
        let doc = corpus
            .document(query_id)
            .filter(|d| d.role == crate::corpus::Role::Query)
            .ok_or_else(|| PipelineError::UnknownQuery(query_id.clone()))?;
        let ranking = match config.mode {
            Mode::Bm25Only => {
                let tokens = tokenize(&doc.abstract_text);
                index.prefetch_topk(query_id, &tokens, config.k)?
            }
            Mode::DenseFull => {
                let source = config.embeddings.expect("validated");
                rank_dense(
                    source.documents(),
                    query_id,
                    query_vector(source, query_id)?,
                    candidate_ids.iter().copied(),
                    config.k,
                )?
            }
            Mode::PrefetchRerank => {
                let source = config.embeddings.expect("validated");
                let tokens = tokenize(&doc.abstract_text);
                let prefetched = index.prefetch_topk(query_id, &tokens, config.prefetch_k)?;
                rerank(
                    &prefetched,
                    source.documents(),
                    query_vector(source, query_id)?,
                )?
                .truncated(config.k)
            }
        };
        rankings.insert(query_id.clone(), ranking);
    }
    Ok(RunResult {
        config: config.echo(),
        rankings,
    })
}
