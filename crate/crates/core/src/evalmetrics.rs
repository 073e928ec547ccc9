//! AP@k / MAP@k, Recall@k, and RR@k / MRR@k against the citation graph,
//! plus per-run report assembly and its canonical on-disk rendering.
//!
//! All metrics are computed in double precision. The report file renders
//! every metric with six decimal places and keeps keys in a fixed order so
//! reports diff cleanly and byte-identical inputs yield byte-identical
//! files.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::CitationGraph;
use crate::pipeline::{RunConfig, RunResult};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("the relevant set is empty")]
    EmptyRelevantSet,
    #[error("query `{0}` has no cited documents in the citation graph")]
    QueryWithoutLabels(String),
    #[error("the run contains no queries")]
    EmptyRun,
    #[error("report file is invalid: {0}")]
    BadFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Denominator convention for AP@k.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApNorm {
    /// `min(|relevant|, k)` -- a perfect top-k page scores 1.
    #[default]
    MinRelK,
    /// `|relevant|` -- stricter when more than `k` documents are relevant.
    NumRelevant,
}

impl ApNorm {
    fn denominator(self, n_relevant: usize, k: usize) -> f64 {
        match self {
            ApNorm::MinRelK => n_relevant.min(k) as f64,
            ApNorm::NumRelevant => n_relevant as f64,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ApNorm::MinRelK => "min_rel_k",
            ApNorm::NumRelevant => "num_relevant",
        }
    }
}

/// Average precision over the top `k` of `ranked`.
pub fn average_precision_at_k(
    ranked: &[&str],
    relevant: &BTreeSet<String>,
    k: usize,
    norm: ApNorm,
) -> Result<f64, EvalError> {
    if relevant.is_empty() {
        return Err(EvalError::EmptyRelevantSet);
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, id) in ranked.iter().take(k).enumerate() {
        if relevant.contains(*id) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    Ok(sum / norm.denominator(relevant.len(), k))
}

/// Fraction of the relevant documents found in the top `k`.
pub fn recall_at_k(
    ranked: &[&str],
    relevant: &BTreeSet<String>,
    k: usize,
) -> Result<f64, EvalError> {
    if relevant.is_empty() {
        return Err(EvalError::EmptyRelevantSet);
    }
    let found = ranked
        .iter()
        .take(k)
        .filter(|id| relevant.contains(**id))
        .count();
    Ok(found as f64 / relevant.len() as f64)
}

/// `1 / rank` of the first relevant document within the top `k`, 0 if none.
pub fn reciprocal_rank_at_k(
    ranked: &[&str],
    relevant: &BTreeSet<String>,
    k: usize,
) -> Result<f64, EvalError> {
    if relevant.is_empty() {
        return Err(EvalError::EmptyRelevantSet);
    }
    for (i, id) in ranked.iter().take(k).enumerate() {
        if relevant.contains(*id) {
            return Ok(1.0 / (i + 1) as f64);
        }
    }
    Ok(0.0)
}

/// Metrics of a single query.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueryMetrics {
    pub ap: f64,
    pub recall: f64,
    pub rr: f64,
    pub n_relevant: usize,
}

/// Unweighted means over all evaluated queries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub map: f64,
    pub recall: f64,
    pub mrr: f64,
}

/// Per-query and aggregate metrics for one run.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct EvalReport {
    pub config: RunConfig,
    pub k: usize,
    pub ap_norm: ApNorm,
    pub n_queries: usize,
    pub aggregate: Aggregate,
    pub per_query: BTreeMap<String, QueryMetrics>,
}

impl EvalReport {
    /// Canonical JSON rendering: fixed key order, metrics at six decimals.
    pub fn render_json(&self) -> String {
        let mut out = String::new();
        out.push_str("{\n");
        let config = serde_json::to_string(&self.config).expect("config serializes");
        let _ = writeln!(out, "  \"config\": {config},");
        let _ = writeln!(out, "  \"k\": {},", self.k);
        let _ = writeln!(out, "  \"ap_norm\": \"{}\",", self.ap_norm.as_str());
        let _ = writeln!(out, "  \"n_queries\": {},", self.n_queries);
        let _ = writeln!(
            out,
            "  \"aggregate\": {{\"map\": {:.6}, \"recall\": {:.6}, \"mrr\": {:.6}}},",
            self.aggregate.map, self.aggregate.recall, self.aggregate.mrr
        );
        out.push_str("  \"per_query\": {\n");
        let last = self.per_query.len();
        for (i, (query_id, m)) in self.per_query.iter().enumerate() {
            let key = serde_json::to_string(query_id).expect("string serializes");
            let comma = if i + 1 == last { "" } else { "," };
            let _ = writeln!(
                out,
                "    {key}: {{\"ap\": {:.6}, \"recall\": {:.6}, \"rr\": {:.6}, \"n_relevant\": {}}}{comma}",
                m.ap, m.recall, m.rr, m.n_relevant
            );
        }
        out.push_str("  }\n}\n");
        out
    }

    pub fn save<W: Write>(&self, mut writer: W) -> Result<(), EvalError> {
        writer.write_all(self.render_json().as_bytes())?;
        Ok(())
    }

    pub fn load<R: Read>(reader: R) -> Result<Self, EvalError> {
        serde_json::from_reader(reader).map_err(|e| EvalError::BadFormat(e.to_string()))
    }
}

/// Evaluates every ranking of the run against the citation graph, using the
/// cited set of each query as its relevant documents.
pub fn evaluate_run(
    run: &RunResult,
    graph: &CitationGraph,
    k: usize,
    ap_norm: ApNorm,
) -> Result<EvalReport, EvalError> {
    if run.rankings.is_empty() {
        return Err(EvalError::EmptyRun);
    }
    let mut per_query = BTreeMap::new();
    let mut sums = (0.0, 0.0, 0.0);
    for (query_id, ranking) in &run.rankings {
        let relevant = graph
            .cited_by(query_id)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| EvalError::QueryWithoutLabels(query_id.clone()))?;
        let ranked: Vec<&str> = ranking.doc_ids().collect();
        let metrics = QueryMetrics {
            ap: average_precision_at_k(&ranked, relevant, k, ap_norm)?,
            recall: recall_at_k(&ranked, relevant, k)?,
            rr: reciprocal_rank_at_k(&ranked, relevant, k)?,
            n_relevant: relevant.len(),
        };
        sums.0 += metrics.ap;
        sums.1 += metrics.recall;
        sums.2 += metrics.rr;
        per_query.insert(query_id.clone(), metrics);
    }
    let n = per_query.len();
    Ok(EvalReport {
        config: run.config.clone(),
        k,
        ap_norm,
        n_queries: n,
        aggregate: Aggregate {
            map: sums.0 / n as f64,
            recall: sums.1 / n as f64,
            mrr: sums.2 / n as f64,
        },
        per_query,
    })
}
