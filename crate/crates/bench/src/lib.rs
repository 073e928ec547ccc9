//! Shared fixtures for the retrieval benchmarks.

use lexcite::corpus::Corpus;
use lexcite::embed::EmbeddingStore;
use lexcite::pipeline::EmbeddingSource;
use lexcite::rng::SplitMix64;
use lexcite::synth::{planted_corpus, SynthConfig};

/// A mid-sized planted corpus: 719 candidates mirrors the scale the pipeline
/// is meant for, 200 queries keeps runs short.
pub fn bench_corpus() -> Corpus {
    planted_corpus(&SynthConfig {
        candidates: 719,
        queries: 200,
        vocabulary: 2000,
        doc_tokens: (60, 120),
        signature_tokens: 4,
        dropout: 0.2,
        seed: 7,
    })
}

/// Random unit-vector embeddings for every document and query.
pub fn bench_embeddings(corpus: &Corpus, dim: usize) -> EmbeddingSource {
    let mut rng = SplitMix64::new(99);
    let mut unit = |dim: usize| -> Vec<f64> {
        let v: Vec<f64> = (0..dim).map(|_| rng.next_f64() * 2.0 - 1.0).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.into_iter().map(|x| x / norm).collect()
    };
    let mut documents = EmbeddingStore::new(dim, "bench-docs").unwrap();
    for doc in corpus.candidates() {
        documents.insert(doc.id.clone(), unit(dim)).unwrap();
    }
    let mut queries = EmbeddingStore::new(dim, "bench-queries").unwrap();
    for doc in corpus.queries() {
        queries.insert(doc.id.clone(), unit(dim)).unwrap();
    }
    EmbeddingSource::new(documents, queries).unwrap()
}
