//! Seeded synthetic corpus generator with planted ground truth.
//!
//! Each generated query cites exactly one candidate, and its abstract is a
//! token-level noisy copy (independent dropout) of that candidate's
//! abstract. The cited document is therefore recoverable by lexical
//! ranking, which makes end-to-end threshold tests possible without any
//! real data. Candidates carry a few globally unique "signature" tokens on
//! top of shared background vocabulary so the planted signal survives
//! dropout.

use crate::corpus::{Corpus, Document, Role};
use crate::rng::SplitMix64;

/// Parameters of the generator. The defaults produce the corpus used by the
/// end-to-end acceptance checks.
#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub candidates: usize,
    pub queries: usize,
    /// Size of the shared background vocabulary.
    pub vocabulary: usize,
    /// Inclusive range of background tokens per candidate abstract.
    pub doc_tokens: (usize, usize),
    /// Globally unique tokens planted in each candidate abstract.
    pub signature_tokens: usize,
    /// Probability that a query drops each copied token.
    pub dropout: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            candidates: 200,
            queries: 50,
            vocabulary: 400,
            doc_tokens: (40, 80),
            signature_tokens: 4,
            dropout: 0.2,
            seed: 42,
        }
    }
}

fn pseudo_word(rng: &mut SplitMix64) -> String {
    let len = 5 + rng.next_below(5) as usize;
    (0..len)
        .map(|_| (b'a' + rng.next_below(26) as u8) as char)
        .collect()
}

/// Generates the planted corpus described by `config`. Deterministic for a
/// fixed configuration.
pub fn planted_corpus(config: &SynthConfig) -> Corpus {
    assert!(config.candidates >= 1 && config.queries >= 1);
    assert!(config.doc_tokens.0 >= 1 && config.doc_tokens.0 <= config.doc_tokens.1);
    assert!((0.0..1.0).contains(&config.dropout));
    let mut rng = SplitMix64::new(config.seed);

    let background: Vec<String> = (0..config.vocabulary)
        .map(|_| pseudo_word(&mut rng))
        .collect();

    let mut documents = Vec::new();
    let mut candidate_tokens = Vec::new();
    for i in 0..config.candidates {
        let id = format!("c{i:04}");
        let (lo, hi) = config.doc_tokens;
        let n_background = lo + rng.next_below((hi - lo + 1) as u64) as usize;
        let mut tokens: Vec<String> = (0..n_background)
            .map(|_| background[rng.next_below(background.len() as u64) as usize].clone())
            .collect();
        // Signature tokens are namespaced by the candidate index, so they
        // occur in exactly one abstract.
        for s in 0..config.signature_tokens {
            tokens.push(format!("sig{i:04}x{s}"));
        }
        rng.shuffle(&mut tokens);
        documents.push(Document {
            id: id.clone(),
            role: Role::Candidate,
            title: format!("candidate article {i}"),
            abstract_text: tokens.join(" "),
            full_text: None,
        });
        candidate_tokens.push((id, tokens));
    }

    let mut edges = Vec::new();
    for i in 0..config.queries {
        let id = format!("q{i:04}");
        let (target_id, tokens) =
            &candidate_tokens[rng.next_below(config.candidates as u64) as usize];
        let mut kept: Vec<&str> = tokens
            .iter()
            .filter(|_| rng.next_f64() >= config.dropout)
            .map(String::as_str)
            .collect();
        if kept.is_empty() {
            kept.push(tokens[0].as_str());
        }
        documents.push(Document {
            id: id.clone(),
            role: Role::Query,
            title: format!("citing article {i}"),
            abstract_text: kept.join(" "),
            full_text: None,
        });
        edges.push((id, target_id.clone()));
    }

    let (corpus, dropped) = Corpus::from_parts(documents, edges, false)
        .expect("generated corpus satisfies all invariants");
    debug_assert_eq!(dropped, 0);
    corpus
}
