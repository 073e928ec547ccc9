//! Two-stage citation recommendation over scholarly corpora.
//!
//! The pipeline ingests a document collection with citation labels, ranks
//! candidate documents for each query abstract, and evaluates the rankings
//! against the citation graph:
//!
//! - [`corpus`] -- documents, citation graph, preprocessing, train/test split
//! - [`lexindex`] -- tokenization, BM25+ inverted index, top-k pre-fetching
//! - [`embed`] -- dense vector stores, cosine similarity, fallback embedder
//! - [`pipeline`] -- the run modes: `bm25_only`, `dense_full`,
//!   `prefetch_rerank`
//! - [`evalmetrics`] -- AP/MAP, Recall, RR/MRR at a cutoff, report files
//! - [`triplets`] -- training-triplet sampling and export
//! - [`synth`] -- seeded corpora with planted, recoverable ground truth
//!
//! Everything is deterministic for fixed inputs and seeds: repeated runs
//! write byte-identical artifacts.

pub mod corpus;
pub mod embed;
pub mod evalmetrics;
pub mod lexindex;
pub mod pipeline;
pub mod rng;
pub mod synth;
pub mod triplets;

pub use corpus::{
    extract_abstract, load_corpus, preprocess_text, split_queries, CitationGraph, Corpus,
    CorpusError, Document, LoadOptions, LoadSummary, Role, SplitSpec,
};
pub use embed::{cosine, hashed_embedding, EmbedError, EmbeddingStore};
pub use evalmetrics::{
    average_precision_at_k, evaluate_run, recall_at_k, reciprocal_rank_at_k, ApNorm, EvalError,
    EvalReport,
};
pub use lexindex::{
    build_index, tokenize, Bm25Index, Bm25Params, IndexError, RankedList, ScoredDoc,
};
pub use pipeline::{
    rank_dense, rerank, run_setup, EmbeddingSource, Mode, PipelineError, RunConfig, RunResult,
    SetupConfig,
};
pub use synth::{planted_corpus, SynthConfig};
pub use triplets::{export_triplets, sample_triplets, SamplingStrategy, Triplet, TripletError};
