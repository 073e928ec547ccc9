//! Document collection, citation graph, text preprocessing, abstract
//! extraction, and the train/test query split.
//!
//! A corpus holds two kinds of documents: `candidate` documents form the
//! retrievable pool, `query` documents are the citing articles whose outgoing
//! citation edges are the relevance labels. Ingestion normalizes every text
//! field (lowercase, ASCII only, single-spaced) so downstream tokenization is
//! trivial and deterministic.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::SplitMix64;

const STORE_MAGIC: &str = "lexcite.corpus";
const STORE_VERSION: u32 = 1;

/// Default cap on the number of words kept when extracting an abstract.
pub const DEFAULT_ABSTRACT_MAX_TOKENS: usize = 512;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("no standalone `abstract` token in the text")]
    MissingAbstractMarker,
    #[error("duplicate document id `{0}`")]
    DuplicateId(String),
    #[error("citation edge ({citing} -> {cited}) references unknown document `{missing}`")]
    DanglingEdge {
        citing: String,
        cited: String,
        missing: String,
    },
    #[error("citation edge ({citing} -> {cited}): document `{id}` has role `{actual}`, expected `{expected}`")]
    EdgeRole {
        citing: String,
        cited: String,
        id: String,
        expected: Role,
        actual: Role,
    },
    #[error("{stream} line {line}: {message}")]
    Schema {
        stream: &'static str,
        line: usize,
        message: String,
    },
    #[error("document `{id}`: {message}")]
    Record { id: String, message: String },
    #[error("corpus has no documents with role `{0}`")]
    EmptyRole(Role),
    #[error("split ratio must lie strictly between 0 and 1, got {0}")]
    InvalidRatio(f64),
    #[error("query split needs at least 2 query documents, corpus has {0}")]
    TooFewQueries(usize),
    #[error("store file is not a corpus store (bad magic `{0}`)")]
    BadMagic(String),
    #[error("unsupported corpus store version {0}")]
    UnsupportedVersion(u32),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Whether a document belongs to the retrievable pool or is a citing article.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Candidate,
    Query,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Role::Candidate => f.write_str("candidate"),
            Role::Query => f.write_str("query"),
        }
    }
}

/// One article. `abstract_text` is always preprocessed; `full_text` is kept
/// as ingested.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub role: Role,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub full_text: Option<String>,
}

/// Directed citation edges, citing -> cited, with forward and reverse maps.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CitationGraph {
    forward: BTreeMap<String, BTreeSet<String>>,
    reverse: BTreeMap<String, BTreeSet<String>>,
    n_edges: usize,
}

impl CitationGraph {
    /// Cited documents of a citing article (its relevance labels).
    pub fn cited_by(&self, citing_id: &str) -> Option<&BTreeSet<String>> {
        self.forward.get(citing_id)
    }

    /// Citing articles of a candidate document.
    pub fn citing_of(&self, cited_id: &str) -> Option<&BTreeSet<String>> {
        self.reverse.get(cited_id)
    }

    pub fn contains(&self, citing_id: &str, cited_id: &str) -> bool {
        self.forward
            .get(citing_id)
            .is_some_and(|s| s.contains(cited_id))
    }

    pub fn len(&self) -> usize {
        self.n_edges
    }

    pub fn is_empty(&self) -> bool {
        self.n_edges == 0
    }

    /// All edges in (citing, cited) lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str)> {
        self.forward
            .iter()
            .flat_map(|(q, cs)| cs.iter().map(move |c| (q.as_str(), c.as_str())))
    }

    /// Inserts an edge; returns false if it was already present.
    fn insert(&mut self, citing_id: &str, cited_id: &str) -> bool {
        let inserted = self
            .forward
            .entry(citing_id.to_string())
            .or_default()
            .insert(cited_id.to_string());
        if inserted {
            self.reverse
                .entry(cited_id.to_string())
                .or_default()
                .insert(citing_id.to_string());
            self.n_edges += 1;
        }
        inserted
    }
}

/// An immutable document collection plus its citation graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    documents: BTreeMap<String, Document>,
    graph: CitationGraph,
}

impl Corpus {
    /// Builds a corpus from already-preprocessed documents and raw edges,
    /// validating every structural invariant. Returns the corpus and the
    /// number of dangling edges dropped (nonzero only with `skip_dangling`).
    pub fn from_parts(
        documents: Vec<Document>,
        edges: Vec<(String, String)>,
        skip_dangling: bool,
    ) -> Result<(Self, usize), CorpusError> {
        let mut map: BTreeMap<String, Document> = BTreeMap::new();
        for doc in documents {
            if doc.id.is_empty() {
                return Err(CorpusError::Record {
                    id: String::new(),
                    message: "document id is empty".into(),
                });
            }
            if doc.abstract_text.is_empty() {
                return Err(CorpusError::Record {
                    id: doc.id,
                    message: "abstract is empty after preprocessing".into(),
                });
            }
            if map.contains_key(&doc.id) {
                return Err(CorpusError::DuplicateId(doc.id));
            }
            map.insert(doc.id.clone(), doc);
        }

        let mut graph = CitationGraph::default();
        let mut dropped = 0usize;
        for (citing, cited) in edges {
            let citing_doc = map.get(&citing);
            let cited_doc = map.get(&cited);
            let missing = match (citing_doc, cited_doc) {
                (None, _) => Some(citing.clone()),
                (_, None) => Some(cited.clone()),
                _ => None,
            };
            if let Some(missing) = missing {
                if skip_dangling {
                    dropped += 1;
                    continue;
                }
                return Err(CorpusError::DanglingEdge {
                    citing,
                    cited,
                    missing,
                });
            }
            for (id, expected) in [(&citing, Role::Query), (&cited, Role::Candidate)] {
                let actual = map[id.as_str()].role;
                if actual != expected {
                    return Err(CorpusError::EdgeRole {
                        citing: citing.clone(),
                        cited: cited.clone(),
                        id: id.clone(),
                        expected,
                        actual,
                    });
                }
            }
            graph.insert(&citing, &cited);
        }

        let corpus = Self {
            documents: map,
            graph,
        };
        for role in [Role::Candidate, Role::Query] {
            if corpus.count_role(role) == 0 {
                return Err(CorpusError::EmptyRole(role));
            }
        }
        Ok((corpus, dropped))
    }

    pub fn document(&self, id: &str) -> Option<&Document> {
        self.documents.get(id)
    }

    pub fn documents(&self) -> impl Iterator<Item = &Document> {
        self.documents.values()
    }

    pub fn candidates(&self) -> impl Iterator<Item = &Document> {
        self.documents
            .values()
            .filter(|d| d.role == Role::Candidate)
    }

    pub fn queries(&self) -> impl Iterator<Item = &Document> {
        self.documents.values().filter(|d| d.role == Role::Query)
    }

    pub fn graph(&self) -> &CitationGraph {
        &self.graph
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    fn count_role(&self, role: Role) -> usize {
        self.documents.values().filter(|d| d.role == role).count()
    }

    pub fn summary(&self) -> CorpusSummary {
        CorpusSummary {
            documents: self.documents.len(),
            candidates: self.count_role(Role::Candidate),
            queries: self.count_role(Role::Query),
            edges: self.graph.len(),
        }
    }

    /// Writes the single-file corpus store.
    pub fn save_store<W: Write>(&self, mut writer: W) -> Result<(), CorpusError> {
        let file = StoreFile {
            magic: STORE_MAGIC.to_string(),
            version: STORE_VERSION,
            documents: self.documents.values().cloned().collect(),
            citations: self
                .graph
                .edges()
                .map(|(citing, cited)| EdgeRecord {
                    citing_id: citing.to_string(),
                    cited_id: cited.to_string(),
                })
                .collect(),
        };
        serde_json::to_writer(&mut writer, &file).map_err(io_from_json)?;
        writer.write_all(b"\n")?;
        Ok(())
    }

    /// Reads a corpus store written by [`Corpus::save_store`].
    pub fn load_store<R: Read>(reader: R) -> Result<Self, CorpusError> {
        let file: StoreFile = serde_json::from_reader(reader).map_err(|e| CorpusError::Schema {
            stream: "store",
            line: e.line(),
            message: e.to_string(),
        })?;
        if file.magic != STORE_MAGIC {
            return Err(CorpusError::BadMagic(file.magic));
        }
        if file.version != STORE_VERSION {
            return Err(CorpusError::UnsupportedVersion(file.version));
        }
        let edges = file
            .citations
            .into_iter()
            .map(|e| (e.citing_id, e.cited_id))
            .collect();
        let (corpus, _) = Self::from_parts(file.documents, edges, false)?;
        Ok(corpus)
    }

    /// Writes the documents back out in the ingest JSON Lines schema.
    pub fn write_documents_jsonl<W: Write>(&self, mut writer: W) -> Result<(), CorpusError> {
        for doc in self.documents.values() {
            serde_json::to_writer(&mut writer, doc).map_err(io_from_json)?;
            writer.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Writes the citation edges in the ingest JSON Lines schema.
    pub fn write_citations_jsonl<W: Write>(&self, mut writer: W) -> Result<(), CorpusError> {
        for (citing, cited) in self.graph.edges() {
            let record = EdgeRecord {
                citing_id: citing.to_string(),
                cited_id: cited.to_string(),
            };
            serde_json::to_writer(&mut writer, &record).map_err(io_from_json)?;
            writer.write_all(b"\n")?;
        }
        Ok(())
    }
}

fn io_from_json(err: serde_json::Error) -> CorpusError {
    CorpusError::Io(std::io::Error::other(err))
}

/// Ingest counters reported by [`load_corpus`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorpusSummary {
    pub documents: usize,
    pub candidates: usize,
    pub queries: usize,
    pub edges: usize,
}

/// [`CorpusSummary`] plus the count of edges dropped during ingest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoadSummary {
    pub documents: usize,
    pub candidates: usize,
    pub queries: usize,
    pub edges: usize,
    pub dropped_edges: usize,
}

/// Knobs for [`load_corpus`].
#[derive(Debug, Clone)]
pub struct LoadOptions {
    /// Drop (and count) citation edges whose endpoints are missing instead of
    /// failing the whole ingest.
    pub skip_dangling: bool,
    /// Word cap applied when deriving an abstract from `full_text`.
    pub abstract_max_tokens: usize,
    /// When `full_text` has no `abstract` marker, fall back to its first
    /// `abstract_max_tokens` words instead of failing.
    pub fallback_first_tokens: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            skip_dangling: false,
            abstract_max_tokens: DEFAULT_ABSTRACT_MAX_TOKENS,
            fallback_first_tokens: false,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct StoreFile {
    magic: String,
    version: u32,
    documents: Vec<Document>,
    citations: Vec<EdgeRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct EdgeRecord {
    citing_id: String,
    cited_id: String,
}

#[derive(Deserialize)]
struct DocumentRecord {
    id: String,
    role: Role,
    title: String,
    #[serde(rename = "abstract")]
    abstract_text: Option<String>,
    full_text: Option<String>,
}

/// Lowercases, strips every non-ASCII code point, and collapses whitespace
/// runs to single spaces (trimming the ends). Idempotent.
pub fn preprocess_text(raw: &str) -> String {
    let lowered = raw.to_lowercase();
    let ascii: String = lowered.chars().filter(char::is_ascii).collect();
    let mut out = String::with_capacity(ascii.len());
    for word in ascii.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// True when the word's alphanumeric content is exactly `marker`, e.g.
/// `abstract` and `abstract:` match but `abstraction` does not.
fn word_is_token(word: &str, marker: &str) -> bool {
    let mut parts = word
        .split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|t| !t.is_empty());
    parts.next() == Some(marker) && parts.next().is_none()
}

/// Returns the text after the first standalone `abstract` token, cut at the
/// first standalone `introduction` token or after `max_tokens` words,
/// whichever comes first. Expects preprocessed input.
pub fn extract_abstract(full_text: &str, max_tokens: usize) -> Result<String, CorpusError> {
    let words: Vec<&str> = full_text.split_whitespace().collect();
    let marker = words
        .iter()
        .position(|w| word_is_token(w, "abstract"))
        .ok_or(CorpusError::MissingAbstractMarker)?;
    let mut kept = Vec::new();
    for word in &words[marker + 1..] {
        if kept.len() == max_tokens || word_is_token(word, "introduction") {
            break;
        }
        kept.push(*word);
    }
    Ok(kept.join(" "))
}

fn first_tokens(text: &str, max_tokens: usize) -> String {
    text.split_whitespace()
        .take(max_tokens)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Parses document and citation JSON Lines streams into a validated corpus.
///
/// Every text field is preprocessed on the way in. Documents without an
/// explicit abstract must carry `full_text`, from which the abstract is
/// extracted per [`extract_abstract`] subject to `options`.
pub fn load_corpus<D: BufRead, C: BufRead>(
    documents: D,
    citations: C,
    options: &LoadOptions,
) -> Result<(Corpus, LoadSummary), CorpusError> {
    let mut docs = Vec::new();
    for (idx, line) in documents.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: DocumentRecord =
            serde_json::from_str(&line).map_err(|e| CorpusError::Schema {
                stream: "documents",
                line: idx + 1,
                message: e.to_string(),
            })?;
        docs.push(ingest_document(record, options)?);
    }

    let mut edges = Vec::new();
    for (idx, line) in citations.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: EdgeRecord = serde_json::from_str(&line).map_err(|e| CorpusError::Schema {
            stream: "citations",
            line: idx + 1,
            message: e.to_string(),
        })?;
        edges.push((record.citing_id, record.cited_id));
    }

    let (corpus, dropped) = Corpus::from_parts(docs, edges, options.skip_dangling)?;
    let counts = corpus.summary();
    Ok((
        corpus,
        LoadSummary {
            documents: counts.documents,
            candidates: counts.candidates,
            queries: counts.queries,
            edges: counts.edges,
            dropped_edges: dropped,
        },
    ))
}

fn ingest_document(record: DocumentRecord, options: &LoadOptions) -> Result<Document, CorpusError> {
    let abstract_text = match (&record.abstract_text, &record.full_text) {
        (Some(text), _) => preprocess_text(text),
        (None, Some(full)) => {
            let processed = preprocess_text(full);
            match extract_abstract(&processed, options.abstract_max_tokens) {
                Ok(text) => text,
                Err(CorpusError::MissingAbstractMarker) if options.fallback_first_tokens => {
                    first_tokens(&processed, options.abstract_max_tokens)
                }
                Err(CorpusError::MissingAbstractMarker) => {
                    return Err(CorpusError::Record {
                        id: record.id,
                        message: "full_text has no standalone `abstract` token; supply an \
                                  abstract or enable the first-tokens fallback"
                            .into(),
                    });
                }
                Err(other) => return Err(other),
            }
        }
        (None, None) => {
            return Err(CorpusError::Record {
                id: record.id,
                message: "record has neither `abstract` nor `full_text`".into(),
            });
        }
    };
    Ok(Document {
        id: record.id,
        role: record.role,
        title: preprocess_text(&record.title),
        abstract_text,
        full_text: record.full_text,
    })
}

/// Deterministic partition of the query documents into train and test ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub ratio: f64,
    pub seed: u64,
    pub train: BTreeSet<String>,
    pub test: BTreeSet<String>,
}

impl SplitSpec {
    pub fn save<W: Write>(&self, mut writer: W) -> Result<(), CorpusError> {
        serde_json::to_writer_pretty(&mut writer, self).map_err(io_from_json)?;
        writer.write_all(b"\n")?;
        Ok(())
    }

    pub fn load<R: Read>(reader: R) -> Result<Self, CorpusError> {
        let spec: SplitSpec = serde_json::from_reader(reader).map_err(|e| CorpusError::Schema {
            stream: "split",
            line: e.line(),
            message: e.to_string(),
        })?;
        Ok(spec)
    }
}

/// Splits the query ids into train/test. Ids are sorted lexicographically,
/// shuffled by SplitMix64 Fisher-Yates (see [`crate::rng`]) with `seed`, and
/// prefix-split so that `|train| = round(ratio * total)`.
pub fn split_queries(corpus: &Corpus, ratio: f64, seed: u64) -> Result<SplitSpec, CorpusError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(CorpusError::InvalidRatio(ratio));
    }
    // BTreeMap iteration already yields ids in lexicographic order.
    let mut ids: Vec<&str> = corpus.queries().map(|d| d.id.as_str()).collect();
    if ids.len() < 2 {
        return Err(CorpusError::TooFewQueries(ids.len()));
    }
    SplitMix64::new(seed).shuffle(&mut ids);
    let n_train = (ratio * ids.len() as f64).round() as usize;
    let (train, test) = ids.split_at(n_train.min(ids.len()));
    Ok(SplitSpec {
        ratio,
        seed,
        train: train.iter().map(|s| s.to_string()).collect(),
        test: test.iter().map(|s| s.to_string()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    use crate::testutil::toy_corpus;

    fn doc(id: &str, role: Role, abstract_text: &str) -> Document {
        Document {
            id: id.into(),
            role,
            title: format!("title of {id}"),
            abstract_text: abstract_text.into(),
            full_text: None,
        }
    }

    #[test]
    fn preprocess_removes_non_ascii_and_lowercases() {
        assert_eq!(preprocess_text("Café LAW"), "caf law");
        assert_eq!(preprocess_text("LEGAL"), "legal");
        assert_eq!(preprocess_text(""), "");
    }

    #[test]
    fn preprocess_collapses_whitespace() {
        assert_eq!(preprocess_text("  a \t b\n\nc  "), "a b c");
    }

    #[test]
    fn extract_abstract_cuts_at_introduction() {
        let text = "title page abstract this paper studies courts introduction we begin";
        assert_eq!(
            extract_abstract(text, 512).unwrap(),
            "this paper studies courts"
        );
    }

    #[test]
    fn extract_abstract_missing_marker() {
        assert!(matches!(
            extract_abstract("no marker here", 512),
            Err(CorpusError::MissingAbstractMarker)
        ));
    }

    #[test]
    fn extract_abstract_splits_at_first_occurrence_only() {
        assert_eq!(
            extract_abstract("abstract abstract x", 512).unwrap(),
            "abstract x"
        );
    }

    #[test]
    fn extract_abstract_honors_max_tokens() {
        assert_eq!(extract_abstract("abstract a b c d", 2).unwrap(), "a b");
    }

    #[test]
    fn extract_abstract_matches_punctuated_markers() {
        let text = "front matter abstract: the finding introduction: next";
        assert_eq!(extract_abstract(text, 512).unwrap(), "the finding");
        // `abstraction` is not a standalone marker
        assert!(matches!(
            extract_abstract("abstraction only", 512),
            Err(CorpusError::MissingAbstractMarker)
        ));
    }

    fn docs_jsonl() -> String {
        [
            r#"{"id":"D1","role":"candidate","title":"One","abstract":"Legal citation"}"#,
            r#"{"id":"D2","role":"candidate","title":"Two","abstract":"legal legal law"}"#,
            r#"{"id":"Q1","role":"query","title":"Q","abstract":"legal"}"#,
        ]
        .join("\n")
    }

    #[test]
    fn load_corpus_happy_path() {
        let cites = r#"{"citing_id":"Q1","cited_id":"D1"}"#;
        let (corpus, summary) = load_corpus(
            Cursor::new(docs_jsonl()),
            Cursor::new(cites),
            &LoadOptions::default(),
        )
        .unwrap();
        assert_eq!(summary.documents, 3);
        assert_eq!(summary.candidates, 2);
        assert_eq!(summary.queries, 1);
        assert_eq!(summary.edges, 1);
        assert_eq!(summary.dropped_edges, 0);
        assert_eq!(
            corpus.document("D1").unwrap().abstract_text,
            "legal citation"
        );
    }

    #[test]
    fn load_corpus_duplicate_id() {
        let docs = format!(
            "{}\n{}",
            docs_jsonl(),
            r#"{"id":"D1","role":"candidate","title":"Dup","abstract":"again"}"#
        );
        let err =
            load_corpus(Cursor::new(docs), Cursor::new(""), &LoadOptions::default()).unwrap_err();
        assert!(matches!(err, CorpusError::DuplicateId(id) if id == "D1"));
    }

    #[test]
    fn load_corpus_dangling_edge_is_fatal_by_default() {
        let cites = r#"{"citing_id":"Q1","cited_id":"NOPE"}"#;
        let err = load_corpus(
            Cursor::new(docs_jsonl()),
            Cursor::new(cites),
            &LoadOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, CorpusError::DanglingEdge { missing, .. } if missing == "NOPE"));
    }

    #[test]
    fn load_corpus_skip_dangling_drops_and_counts() {
        let cites = [
            r#"{"citing_id":"Q1","cited_id":"NOPE"}"#,
            r#"{"citing_id":"Q1","cited_id":"D1"}"#,
        ]
        .join("\n");
        let options = LoadOptions {
            skip_dangling: true,
            ..LoadOptions::default()
        };
        let (corpus, summary) =
            load_corpus(Cursor::new(docs_jsonl()), Cursor::new(cites), &options).unwrap();
        assert_eq!(summary.dropped_edges, 1);
        assert_eq!(summary.edges, 1);
        assert!(corpus.graph().contains("Q1", "D1"));
    }

    #[test]
    fn load_corpus_rejects_wrong_role_edges() {
        let cites = r#"{"citing_id":"D1","cited_id":"D2"}"#;
        let err = load_corpus(
            Cursor::new(docs_jsonl()),
            Cursor::new(cites),
            &LoadOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(
            err,
            CorpusError::EdgeRole {
                expected: Role::Query,
                ..
            }
        ));
    }

    #[test]
    fn load_corpus_schema_error_carries_line() {
        let docs = format!("{}\nnot json", docs_jsonl());
        let err =
            load_corpus(Cursor::new(docs), Cursor::new(""), &LoadOptions::default()).unwrap_err();
        assert!(matches!(err, CorpusError::Schema { line: 4, .. }));
    }

    #[test]
    fn load_corpus_derives_abstract_from_full_text() {
        let docs = format!(
            "{}\n{}",
            docs_jsonl(),
            r#"{"id":"D9","role":"candidate","title":"F","full_text":"Preamble ABSTRACT courts decide Introduction body"}"#
        );
        let (corpus, _) =
            load_corpus(Cursor::new(docs), Cursor::new(""), &LoadOptions::default()).unwrap();
        assert_eq!(
            corpus.document("D9").unwrap().abstract_text,
            "courts decide"
        );
    }

    #[test]
    fn load_corpus_full_text_without_marker_errors_unless_fallback() {
        let record =
            r#"{"id":"D9","role":"candidate","title":"F","full_text":"plain words only here"}"#;
        let docs = format!("{}\n{record}", docs_jsonl());
        let err = load_corpus(
            Cursor::new(docs.clone()),
            Cursor::new(""),
            &LoadOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, CorpusError::Record { id, .. } if id == "D9"));

        let options = LoadOptions {
            fallback_first_tokens: true,
            abstract_max_tokens: 3,
            ..LoadOptions::default()
        };
        let (corpus, _) = load_corpus(Cursor::new(docs), Cursor::new(""), &options).unwrap();
        assert_eq!(
            corpus.document("D9").unwrap().abstract_text,
            "plain words only"
        );
    }

    #[test]
    fn load_corpus_rejects_empty_abstract() {
        let docs = r#"{"id":"D1","role":"candidate","title":"T","abstract":"éè"}"#;
        let err =
            load_corpus(Cursor::new(docs), Cursor::new(""), &LoadOptions::default()).unwrap_err();
        assert!(matches!(err, CorpusError::Record { id, .. } if id == "D1"));
    }

    #[test]
    fn store_round_trips() {
        let corpus = toy_corpus();
        let mut buf = Vec::new();
        corpus.save_store(&mut buf).unwrap();
        let reloaded = Corpus::load_store(Cursor::new(&buf)).unwrap();
        assert_eq!(corpus, reloaded);

        let mut buf2 = Vec::new();
        reloaded.save_store(&mut buf2).unwrap();
        assert_eq!(buf, buf2);
    }

    #[test]
    fn store_rejects_bad_magic() {
        let raw = r#"{"magic":"other","version":1,"documents":[],"citations":[]}"#;
        assert!(matches!(
            Corpus::load_store(Cursor::new(raw)),
            Err(CorpusError::BadMagic(_))
        ));
    }

    fn corpus_with_queries(n: usize) -> Corpus {
        let mut docs = vec![doc("cand", Role::Candidate, "pool text")];
        for i in 0..n {
            docs.push(doc(&format!("q{i:02}"), Role::Query, "query text"));
        }
        Corpus::from_parts(docs, Vec::new(), false).unwrap().0
    }

    #[test]
    fn split_sizes_follow_the_ratio() {
        let corpus = corpus_with_queries(10);
        let split = split_queries(&corpus, 0.7, 42).unwrap();
        assert_eq!(split.train.len(), 7);
        assert_eq!(split.test.len(), 3);
    }

    #[test]
    fn split_is_deterministic() {
        let corpus = corpus_with_queries(10);
        let a = split_queries(&corpus, 0.7, 42).unwrap();
        let b = split_queries(&corpus, 0.7, 42).unwrap();
        assert_eq!(a, b);
        let c = split_queries(&corpus, 0.7, 43).unwrap();
        assert_ne!(a.train, c.train);
    }

    #[test]
    fn split_rejects_out_of_range_ratio() {
        let corpus = corpus_with_queries(10);
        for ratio in [1.0, 0.0, -0.5, 1.5, f64::NAN] {
            assert!(matches!(
                split_queries(&corpus, ratio, 1),
                Err(CorpusError::InvalidRatio(_))
            ));
        }
    }

    #[test]
    fn split_partitions_the_query_ids() {
        let corpus = corpus_with_queries(23);
        let split = split_queries(&corpus, 0.37, 5).unwrap();
        assert!(split.train.is_disjoint(&split.test));
        let mut union: Vec<&String> = split.train.union(&split.test).collect();
        union.sort();
        let all: Vec<String> = corpus.queries().map(|d| d.id.clone()).collect();
        assert_eq!(union.len(), all.len());
        assert!(union.iter().zip(&all).all(|(a, b)| **a == *b));
    }

    #[test]
    fn split_needs_two_queries() {
        let corpus = corpus_with_queries(1);
        assert!(matches!(
            split_queries(&corpus, 0.5, 1),
            Err(CorpusError::TooFewQueries(1))
        ));
    }

    #[test]
    fn split_file_round_trips() {
        let corpus = corpus_with_queries(9);
        let split = split_queries(&corpus, 0.6, 11).unwrap();
        let mut buf = Vec::new();
        split.save(&mut buf).unwrap();
        let reloaded = SplitSpec::load(Cursor::new(&buf)).unwrap();
        assert_eq!(split, reloaded);
    }
}
