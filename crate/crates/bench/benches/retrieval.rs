use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use lexcite::evalmetrics::{evaluate_run, ApNorm};
use lexcite::lexindex::{build_index, tokenize, Bm25Params};
use lexcite::pipeline::{rank_dense, rerank, run_setup, SetupConfig};
use lexcite::split_queries;

use lexcite_bench::{bench_corpus, bench_embeddings};

fn retrieval(c: &mut Criterion) {
    let corpus = bench_corpus();
    let index = build_index(&corpus, Bm25Params::default()).unwrap();
    let source = bench_embeddings(&corpus, 256);
    let query = corpus.queries().next().unwrap();
    let query_tokens = tokenize(&query.abstract_text);
    let query_vector = source.queries().get(&query.id).unwrap().to_vec();
    let candidate_ids: Vec<&str> = corpus.candidates().map(|d| d.id.as_str()).collect();

    c.bench_function("build_index/719_docs", |b| {
        b.iter(|| build_index(black_box(&corpus), Bm25Params::default()).unwrap())
    });

    c.bench_function("bm25_score/single_doc", |b| {
        let doc_id = candidate_ids[0];
        b.iter(|| {
            index
                .score(black_box(&query_tokens), black_box(doc_id))
                .unwrap()
        })
    });

    c.bench_function("prefetch_topk/k10", |b| {
        b.iter(|| {
            index
                .prefetch_topk(&query.id, black_box(&query_tokens), 10)
                .unwrap()
        })
    });

    c.bench_function("rank_dense/719_candidates_dim256", |b| {
        b.iter(|| {
            rank_dense(
                source.documents(),
                &query.id,
                black_box(&query_vector),
                candidate_ids.iter().copied(),
                10,
            )
            .unwrap()
        })
    });

    c.bench_function("rerank/top10", |b| {
        let prefetched = index.prefetch_topk(&query.id, &query_tokens, 10).unwrap();
        b.iter(|| rerank(black_box(&prefetched), source.documents(), &query_vector).unwrap())
    });

    let split = split_queries(&corpus, 0.7, 42).unwrap();
    c.bench_function("run_setup/bm25_only_60_queries", |b| {
        b.iter(|| run_setup(&corpus, &split, &index, &SetupConfig::bm25_only(10)).unwrap())
    });

    let run = run_setup(&corpus, &split, &index, &SetupConfig::bm25_only(10)).unwrap();
    c.bench_function("evaluate_run/60_queries", |b| {
        b.iter_batched(
            || run.clone(),
            |run| evaluate_run(black_box(&run), corpus.graph(), 10, ApNorm::MinRelK).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(benches, retrieval);
criterion_main!(benches);
