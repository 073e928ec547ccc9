//! Command execution: each subcommand reads its inputs, runs the library,
//! and writes its artifact atomically (temp file + rename), so a failing
//! invocation never leaves a partial output behind.

use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use lexcite::corpus::{load_corpus, Corpus, LoadOptions, SplitSpec};
use lexcite::embed::{hashed_embedding, EmbeddingStore};
use lexcite::evalmetrics::evaluate_run;
use lexcite::lexindex::{build_index, tokenize, Bm25Index, Bm25Params, RankedList};
use lexcite::pipeline::{
    rank_dense, rerank, run_setup, EmbeddingSource, Mode, RunResult, SetupConfig,
};
use lexcite::triplets::{export_triplets, sample_triplets};
use lexcite::ApNorm;

use crate::args::{
    Command, EmbedArgs, EmbeddingSourceArgs, EvaluateArgs, ExportTripletsArgs, IndexArgs,
    IngestArgs, QueryArgs, RunArgs, SplitArgs,
};

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::Ingest(args) => ingest(args),
        Command::Split(args) => split(args),
        Command::Index(args) => index(args),
        Command::Embed(args) => embed(args),
        Command::Query(args) => query(args),
        Command::Run(args) => run(args),
        Command::Evaluate(args) => evaluate(args),
        Command::ExportTriplets(args) => export(args),
    }
}

fn open(path: &Path, flag: &str) -> Result<BufReader<File>> {
    let file = File::open(path)
        .with_context(|| format!("cannot open {flag} file `{}`", path.display()))?;
    Ok(BufReader::new(file))
}

/// Writes `render` output to `path` via a temp sibling so failures leave no
/// partial artifact.
fn write_atomic(path: &Path, render: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
    let mut buffer = Vec::new();
    render(&mut buffer)?;
    let tmp = temp_sibling(path);
    let write = || -> Result<()> {
        let mut file = File::create(&tmp)
            .with_context(|| format!("cannot create output file `{}`", tmp.display()))?;
        file.write_all(&buffer)?;
        file.sync_all()?;
        fs::rename(&tmp, path)
            .with_context(|| format!("cannot move output into place at `{}`", path.display()))?;
        Ok(())
    };
    let result = write();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

fn temp_sibling(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".tmp");
    path.with_file_name(name)
}

fn load_store(path: &Path) -> Result<Corpus> {
    Corpus::load_store(open(path, "--corpus")?)
        .with_context(|| format!("cannot load corpus store `{}`", path.display()))
}

fn load_split(path: &Path) -> Result<SplitSpec> {
    SplitSpec::load(open(path, "--split")?)
        .with_context(|| format!("cannot load split file `{}`", path.display()))
}

fn load_index(path: &Path) -> Result<Bm25Index> {
    Bm25Index::load(open(path, "--index")?)
        .with_context(|| format!("cannot load index file `{}`", path.display()))
}

fn ingest(args: IngestArgs) -> Result<()> {
    let options = LoadOptions {
        skip_dangling: args.skip_dangling,
        abstract_max_tokens: args.max_abstract_tokens as usize,
        fallback_first_tokens: args.fallback_first_tokens,
    };
    let documents = open(&args.documents, "--documents")?;
    let citations = open(&args.citations, "--citations")?;
    let (corpus, summary) = load_corpus(documents, citations, &options)?;
    write_atomic(&args.output, |out| {
        corpus.save_store(out)?;
        Ok(())
    })?;
    println!(
        "documents={} candidates={} queries={} edges={}",
        summary.documents, summary.candidates, summary.queries, summary.edges
    );
    if args.skip_dangling {
        println!("dropped_edges={}", summary.dropped_edges);
    }
    Ok(())
}

fn split(args: SplitArgs) -> Result<()> {
    let corpus = load_store(&args.corpus)?;
    let split = lexcite::split_queries(&corpus, args.ratio, args.seed)?;
    write_atomic(&args.output, |out| {
        split.save(out)?;
        Ok(())
    })?;
    println!("train={} test={}", split.train.len(), split.test.len());
    Ok(())
}

fn index(args: IndexArgs) -> Result<()> {
    let corpus = load_store(&args.corpus)?;
    let params = Bm25Params {
        k1: args.k1,
        b: args.b,
        delta: args.delta,
    };
    let index = build_index(&corpus, params)?;
    write_atomic(&args.output, |out| {
        index.save(out)?;
        Ok(())
    })?;
    println!(
        "indexed_documents={} vocabulary={} avgdl={:.6}",
        index.n_documents(),
        index.vocabulary().count(),
        index.avgdl()
    );
    Ok(())
}

fn hashed_store_for<'a>(
    docs: impl Iterator<Item = &'a lexcite::Document>,
    index: &Bm25Index,
    dim: usize,
    seed: u64,
    provenance: String,
) -> Result<EmbeddingStore> {
    let mut store = EmbeddingStore::new(dim, provenance)?;
    for doc in docs {
        let vector = hashed_embedding(index, &doc.abstract_text, dim, seed)
            .with_context(|| format!("cannot embed document `{}`", doc.id))?;
        store.insert(doc.id.clone(), vector)?;
    }
    Ok(store)
}

fn embed(args: EmbedArgs) -> Result<()> {
    let corpus = load_store(&args.corpus)?;
    let index = load_index(&args.index)?;
    let dim = args.dim as usize;
    let label = |side: &str| format!("fallback-hash({side}, dim={dim}, seed={})", args.seed);
    let documents = hashed_store_for(
        corpus.candidates(),
        &index,
        dim,
        args.seed,
        label("documents"),
    )?;
    let queries = hashed_store_for(corpus.queries(), &index, dim, args.seed, label("queries"))?;
    write_atomic(&args.output_documents, |out| {
        documents.save(out)?;
        Ok(())
    })?;
    write_atomic(&args.output_queries, |out| {
        queries.save(out)?;
        Ok(())
    })?;
    println!(
        "documents_embedded={} queries_embedded={} dim={dim}",
        documents.len(),
        queries.len()
    );
    Ok(())
}

/// Builds the embedding source a dense mode runs with: either the two files
/// named on the command line, or hashed fallback embeddings for the
/// candidates plus the given query ids.
fn embedding_source(
    args: &EmbeddingSourceArgs,
    corpus: &Corpus,
    index: &Bm25Index,
    query_ids: &[&str],
) -> Result<EmbeddingSource> {
    if let (Some(doc_path), Some(query_path)) = (&args.document_embeddings, &args.query_embeddings)
    {
        let documents = EmbeddingStore::load(
            open(doc_path, "--document-embeddings")?,
            None,
            doc_path.display().to_string(),
        )?;
        let queries = EmbeddingStore::load(
            open(query_path, "--query-embeddings")?,
            Some(documents.dim()),
            query_path.display().to_string(),
        )?;
        return Ok(EmbeddingSource::new(documents, queries)?);
    }
    let dim = args.dim as usize;
    let seed = args.embed_seed;
    let label = |side: &str| format!("fallback-hash({side}, dim={dim}, seed={seed})");
    let documents = hashed_store_for(corpus.candidates(), index, dim, seed, label("documents"))?;
    let mut queries = EmbeddingStore::new(dim, label("queries"))?;
    for id in query_ids {
        let doc = corpus
            .document(id)
            .with_context(|| format!("split references unknown query `{id}`"))?;
        let vector = hashed_embedding(index, &doc.abstract_text, dim, seed)
            .with_context(|| format!("cannot embed query `{id}`"))?;
        queries.insert(doc.id.clone(), vector)?;
    }
    Ok(EmbeddingSource::new(documents, queries)?)
}

fn print_ranking(ranking: &RankedList) {
    for (rank, entry) in ranking.entries.iter().enumerate() {
        println!("{}\t{}\t{:.6}", rank + 1, entry.doc_id, entry.score);
    }
}

fn query(args: QueryArgs) -> Result<()> {
    let corpus = load_store(&args.corpus)?;
    let index = load_index(&args.index)?;
    let mode = Mode::from(args.mode);
    let k = args.k as usize;
    let prefetch_k = args.prefetch_k as usize;

    let (query_id, query_text) = match (&args.query_id, &args.text) {
        (Some(id), None) => {
            let doc = corpus
                .document(id)
                .with_context(|| format!("document `{id}` is not in the corpus"))?;
            (id.clone(), doc.abstract_text.clone())
        }
        (None, Some(text)) => ("<text>".to_string(), lexcite::preprocess_text(text)),
        _ => unreachable!("validated at parse time"),
    };
    let tokens = tokenize(&query_text);

    let ranking = match mode {
        Mode::Bm25Only => index.prefetch_topk(&query_id, &tokens, k)?,
        Mode::DenseFull | Mode::PrefetchRerank => {
            // Free text has no corpus id to embed; its vector is hashed below.
            let known_ids: Vec<&str> = match &args.query_id {
                Some(id) => vec![id.as_str()],
                None => Vec::new(),
            };
            let source = embedding_source(&args.embeddings, &corpus, &index, &known_ids)?;
            let query_vector: Vec<f64> = match source.queries().get(&query_id) {
                Some(vector) => vector.to_vec(),
                // Free text with fallback embeddings: hash it directly.
                None => hashed_embedding(
                    &index,
                    &query_text,
                    source.documents().dim(),
                    args.embeddings.embed_seed,
                )?,
            };
            if mode == Mode::DenseFull {
                let candidate_ids: Vec<&str> = corpus.candidates().map(|d| d.id.as_str()).collect();
                rank_dense(
                    source.documents(),
                    &query_id,
                    &query_vector,
                    candidate_ids.iter().copied(),
                    k,
                )?
            } else {
                let prefetched = index.prefetch_topk(&query_id, &tokens, prefetch_k)?;
                rerank(&prefetched, source.documents(), &query_vector)?.truncated(k)
            }
        }
    };
    print_ranking(&ranking);
    Ok(())
}

fn run_result(
    corpus: &Corpus,
    split: &SplitSpec,
    index: &Bm25Index,
    mode: Mode,
    k: usize,
    prefetch_k: usize,
    embeddings: &EmbeddingSourceArgs,
) -> Result<RunResult> {
    let source = if mode.needs_embeddings() {
        let query_ids: Vec<&str> = split.test.iter().map(String::as_str).collect();
        Some(embedding_source(embeddings, corpus, index, &query_ids)?)
    } else {
        None
    };
    let config = SetupConfig {
        mode,
        k,
        prefetch_k,
        embeddings: source.as_ref(),
    };
    Ok(run_setup(corpus, split, index, &config)?)
}

fn run(args: RunArgs) -> Result<()> {
    let corpus = load_store(&args.corpus)?;
    let split = load_split(&args.split)?;
    let index = load_index(&args.index)?;
    let result = run_result(
        &corpus,
        &split,
        &index,
        Mode::from(args.mode),
        args.k as usize,
        args.prefetch_k as usize,
        &args.embeddings,
    )?;
    write_atomic(&args.output, |out| {
        result.save(out)?;
        Ok(())
    })?;
    println!("queries_ranked={}", result.rankings.len());
    Ok(())
}

fn evaluate(args: EvaluateArgs) -> Result<()> {
    let corpus = load_store(&args.corpus)?;
    let k = args.k as usize;
    let ap_norm = ApNorm::from(args.ap_norm);
    let result = match (&args.run, args.mode) {
        (Some(run_path), None) => RunResult::load(open(run_path, "--run")?)
            .with_context(|| format!("cannot load run file `{}`", run_path.display()))?,
        (None, Some(mode)) => {
            let split = load_split(args.split.as_ref().expect("validated"))?;
            let index = load_index(args.index.as_ref().expect("validated"))?;
            run_result(
                &corpus,
                &split,
                &index,
                Mode::from(mode),
                k,
                args.prefetch_k as usize,
                &args.embeddings,
            )?
        }
        _ => unreachable!("validated at parse time"),
    };
    let report = evaluate_run(&result, corpus.graph(), k, ap_norm)?;
    write_atomic(&args.output, |out| {
        report.save(out)?;
        Ok(())
    })?;
    println!(
        "map={:.6} recall={:.6} mrr={:.6} n_queries={}",
        report.aggregate.map, report.aggregate.recall, report.aggregate.mrr, report.n_queries
    );
    Ok(())
}

fn export(args: ExportTripletsArgs) -> Result<()> {
    let corpus = load_store(&args.corpus)?;
    let split = load_split(&args.split)?;
    let index = match &args.index {
        Some(path) => Some(load_index(path)?),
        None => None,
    };
    let triplets = sample_triplets(
        &corpus,
        &split,
        args.strategy.into(),
        args.negatives_per_positive as usize,
        args.seed,
        index.as_ref(),
    )?;
    let mut count = 0;
    write_atomic(&args.output, |out| {
        count = export_triplets(&triplets, &corpus, out)?;
        Ok(())
    })?;
    println!("triplets={count}");
    Ok(())
}
