//! Argument definitions and cross-flag validation.
//!
//! Defaults mirror the pipeline's canonical configuration: `k = 10`,
//! `prefetch_k = 10`, BM25+ parameters `k1 = 1.5`, `b = 0.75`,
//! `delta = 1.0`, and a 70/30 train/test split.

use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{ArgAction, Args, CommandFactory, Parser, Subcommand, ValueEnum};

use lexcite::pipeline::Mode;
use lexcite::triplets::SamplingStrategy;
use lexcite::ApNorm;

#[derive(Debug, Parser)]
#[command(
    name = "lexcite",
    version,
    about = "Two-stage citation recommendation: ingest, index, rank, evaluate",
    propagate_version = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ingest document and citation JSON Lines files into a corpus store.
    Ingest(IngestArgs),
    /// Partition the query documents into train and test sets.
    Split(SplitArgs),
    /// Build the BM25+ index over candidate abstracts.
    Index(IndexArgs),
    /// Write fallback hashed embeddings for candidates and queries.
    Embed(EmbedArgs),
    /// Rank candidates for a single query and print the result.
    Query(QueryArgs),
    /// Rank candidates for every test query and write a run file.
    Run(RunArgs),
    /// Score a run (existing or freshly executed) against the citation graph.
    Evaluate(EvaluateArgs),
    /// Export (anchor, positive, negative) training triplets.
    ExportTriplets(ExportTripletsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    #[value(name = "bm25_only")]
    Bm25Only,
    #[value(name = "dense_full")]
    DenseFull,
    #[value(name = "prefetch_rerank")]
    PrefetchRerank,
}

impl From<ModeArg> for Mode {
    fn from(mode: ModeArg) -> Self {
        match mode {
            ModeArg::Bm25Only => Mode::Bm25Only,
            ModeArg::DenseFull => Mode::DenseFull,
            ModeArg::PrefetchRerank => Mode::PrefetchRerank,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    #[value(name = "random")]
    Random,
    #[value(name = "bm25_hard")]
    Bm25Hard,
}

impl From<StrategyArg> for SamplingStrategy {
    fn from(strategy: StrategyArg) -> Self {
        match strategy {
            StrategyArg::Random => SamplingStrategy::Random,
            StrategyArg::Bm25Hard => SamplingStrategy::Bm25Hard,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ApNormArg {
    #[value(name = "min_rel_k")]
    MinRelK,
    #[value(name = "num_relevant")]
    NumRelevant,
}

impl From<ApNormArg> for ApNorm {
    fn from(norm: ApNormArg) -> Self {
        match norm {
            ApNormArg::MinRelK => ApNorm::MinRelK,
            ApNormArg::NumRelevant => ApNorm::NumRelevant,
        }
    }
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Documents file (JSON Lines, one document per line).
    #[arg(long)]
    pub documents: PathBuf,
    /// Citations file (JSON Lines, one edge per line).
    #[arg(long)]
    pub citations: PathBuf,
    /// Corpus store to write.
    #[arg(long)]
    pub output: PathBuf,
    /// Drop citation edges with missing endpoints instead of failing.
    #[arg(long, action = ArgAction::SetTrue)]
    pub skip_dangling: bool,
    /// Word cap when deriving abstracts from full text.
    #[arg(long, default_value_t = 512, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_abstract_tokens: u64,
    /// With no `abstract` marker in full text, keep the first words instead
    /// of failing.
    #[arg(long, action = ArgAction::SetTrue)]
    pub fallback_first_tokens: bool,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Corpus store produced by `ingest`.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Split file to write.
    #[arg(long)]
    pub output: PathBuf,
    /// Fraction of query documents assigned to the train set.
    #[arg(long, default_value_t = 0.7)]
    pub ratio: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    /// Corpus store produced by `ingest`.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Index file to write.
    #[arg(long)]
    pub output: PathBuf,
    /// Term-frequency saturation.
    #[arg(long, default_value_t = 1.5)]
    pub k1: f64,
    /// Length normalization strength.
    #[arg(long, default_value_t = 0.75)]
    pub b: f64,
    /// BM25+ lower-bound bonus.
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    /// Corpus store produced by `ingest`.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Index file providing the idf weights.
    #[arg(long)]
    pub index: PathBuf,
    /// Embedding dimension.
    #[arg(long, default_value_t = 256, value_parser = clap::value_parser!(u64).range(2..))]
    pub dim: u64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Candidate (document) embeddings file to write.
    #[arg(long)]
    pub output_documents: PathBuf,
    /// Query embeddings file to write.
    #[arg(long)]
    pub output_queries: PathBuf,
}

#[derive(Debug, Args, Clone)]
pub struct EmbeddingSourceArgs {
    /// Candidate embeddings file (JSON Lines).
    #[arg(long)]
    pub document_embeddings: Option<PathBuf>,
    /// Query embeddings file (JSON Lines).
    #[arg(long)]
    pub query_embeddings: Option<PathBuf>,
    /// Synthesize hashed embeddings instead of reading files.
    #[arg(long, action = ArgAction::SetTrue)]
    pub fallback_embeddings: bool,
    /// Dimension of synthesized embeddings.
    #[arg(long, default_value_t = 256, value_parser = clap::value_parser!(u64).range(2..))]
    pub dim: u64,
    /// Seed of synthesized embeddings.
    #[arg(long, default_value_t = 7)]
    pub embed_seed: u64,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    /// Corpus store produced by `ingest`.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Index file produced by `index`.
    #[arg(long)]
    pub index: PathBuf,
    /// Rank candidates for this document id.
    #[arg(long, conflicts_with = "text")]
    pub query_id: Option<String>,
    /// Rank candidates for free text (preprocessed before use).
    #[arg(long)]
    pub text: Option<String>,
    #[arg(long, value_enum, default_value = "bm25_only")]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub k: u64,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub prefetch_k: u64,
    #[command(flatten)]
    pub embeddings: EmbeddingSourceArgs,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Corpus store produced by `ingest`.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Split file produced by `split`.
    #[arg(long)]
    pub split: PathBuf,
    /// Index file produced by `index`.
    #[arg(long)]
    pub index: PathBuf,
    #[arg(long, value_enum)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub k: u64,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub prefetch_k: u64,
    #[command(flatten)]
    pub embeddings: EmbeddingSourceArgs,
    /// Run file to write.
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Corpus store providing the citation graph.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Evaluate an existing run file.
    #[arg(long)]
    pub run: Option<PathBuf>,
    /// Execute this mode and evaluate the result (requires --split/--index).
    #[arg(long, value_enum, conflicts_with = "run")]
    pub mode: Option<ModeArg>,
    /// Split file (with --mode).
    #[arg(long)]
    pub split: Option<PathBuf>,
    /// Index file (with --mode).
    #[arg(long)]
    pub index: Option<PathBuf>,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub k: u64,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub prefetch_k: u64,
    /// AP@k denominator convention.
    #[arg(long, value_enum, default_value = "min_rel_k")]
    pub ap_norm: ApNormArg,
    #[command(flatten)]
    pub embeddings: EmbeddingSourceArgs,
    /// Report file to write.
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExportTripletsArgs {
    /// Corpus store produced by `ingest`.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Split file produced by `split`.
    #[arg(long)]
    pub split: PathBuf,
    #[arg(long, value_enum, default_value = "random")]
    pub strategy: StrategyArg,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub negatives_per_positive: u64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Index file (required with --strategy bm25_hard).
    #[arg(long)]
    pub index: Option<PathBuf>,
    /// Triplet file to write.
    #[arg(long)]
    pub output: PathBuf,
}

fn usage_error(message: String) -> clap::Error {
    Cli::command().error(ErrorKind::ValueValidation, message)
}

impl EmbeddingSourceArgs {
    /// A mode that re-ranks needs exactly one of: both embedding files, or
    /// the fallback embedder.
    fn validate(&self, mode_needs_embeddings: bool) -> Result<(), clap::Error> {
        let files = match (&self.document_embeddings, &self.query_embeddings) {
            (Some(_), Some(_)) => true,
            (None, None) => false,
            (Some(_), None) => {
                return Err(usage_error(
                    "--document-embeddings requires --query-embeddings".into(),
                ))
            }
            (None, Some(_)) => {
                return Err(usage_error(
                    "--query-embeddings requires --document-embeddings".into(),
                ))
            }
        };
        if files && self.fallback_embeddings {
            return Err(usage_error(
                "--fallback-embeddings conflicts with embedding file flags".into(),
            ));
        }
        if mode_needs_embeddings && !files && !self.fallback_embeddings {
            return Err(usage_error(
                "this mode needs --document-embeddings/--query-embeddings or \
                 --fallback-embeddings"
                    .into(),
            ));
        }
        if !mode_needs_embeddings && (files || self.fallback_embeddings) {
            return Err(usage_error(
                "embedding flags are only meaningful for dense_full or prefetch_rerank".into(),
            ));
        }
        Ok(())
    }
}

/// Parses `argv` and applies every cross-flag rule, so `execute` starts from
/// a coherent configuration.
pub fn parse_args<I, T>(argv: I) -> Result<Cli, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv)?;
    validate(&cli)?;
    Ok(cli)
}

fn validate(cli: &Cli) -> Result<(), clap::Error> {
    match &cli.command {
        Command::Split(args) => {
            if !(args.ratio > 0.0 && args.ratio < 1.0) {
                return Err(usage_error(format!(
                    "--ratio must lie strictly between 0 and 1, got {}",
                    args.ratio
                )));
            }
        }
        Command::Index(args) => {
            lexcite::Bm25Params {
                k1: args.k1,
                b: args.b,
                delta: args.delta,
            }
            .validate()
            .map_err(|e| usage_error(e.to_string()))?;
        }
        Command::Query(args) => {
            if args.query_id.is_none() && args.text.is_none() {
                return Err(usage_error("query needs --query-id or --text".into()));
            }
            let mode = Mode::from(args.mode);
            args.embeddings.validate(mode.needs_embeddings())?;
            if args.text.is_some()
                && mode.needs_embeddings()
                && !args.embeddings.fallback_embeddings
            {
                return Err(usage_error(
                    "--text with a dense mode requires --fallback-embeddings \
                     (files cannot embed ad-hoc text)"
                        .into(),
                ));
            }
            if args.prefetch_k < args.k {
                return Err(usage_error(format!(
                    "--prefetch-k ({}) must be at least --k ({})",
                    args.prefetch_k, args.k
                )));
            }
        }
        Command::Run(args) => {
            args.embeddings
                .validate(Mode::from(args.mode).needs_embeddings())?;
            if args.prefetch_k < args.k {
                return Err(usage_error(format!(
                    "--prefetch-k ({}) must be at least --k ({})",
                    args.prefetch_k, args.k
                )));
            }
        }
        Command::Evaluate(args) => {
            match (&args.run, args.mode) {
                (None, None) => {
                    return Err(usage_error("evaluate needs --run or --mode".into()));
                }
                (Some(_), None) => {
                    if args.split.is_some() || args.index.is_some() {
                        return Err(usage_error(
                            "--split/--index are only meaningful with --mode".into(),
                        ));
                    }
                    args.embeddings.validate(false)?;
                }
                (None, Some(mode)) => {
                    if args.split.is_none() || args.index.is_none() {
                        return Err(usage_error("--mode requires --split and --index".into()));
                    }
                    args.embeddings
                        .validate(Mode::from(mode).needs_embeddings())?;
                }
                (Some(_), Some(_)) => unreachable!("clap conflicts_with rejects this"),
            }
            if args.prefetch_k < args.k {
                return Err(usage_error(format!(
                    "--prefetch-k ({}) must be at least --k ({})",
                    args.prefetch_k, args.k
                )));
            }
        }
        Command::ExportTriplets(args) => {
            if args.strategy == StrategyArg::Bm25Hard && args.index.is_none() {
                return Err(usage_error("--strategy bm25_hard requires --index".into()));
            }
        }
        Command::Ingest(_) | Command::Embed(_) => {}
    }
    Ok(())
}
