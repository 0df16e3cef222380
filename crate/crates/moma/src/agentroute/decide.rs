//! Final agent decision over the candidate set.
//!
//! A pluggable backend (a real LLM in production) scores the candidate
//! vocabulary given a structured prompt; decoding applies the availability
//! mask so only candidates can be emitted. The shipped default backend ranks
//! by description similarity, keeping the whole pipeline deterministic.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::Serialize;

use super::fsm::ResolvedState;
use super::mask::{build_mask, masked_decode};
use crate::catalog::AgentDescriptor;
use crate::encoder::{cosine_sim, SharedEncoder};
use crate::error::{Error, Result};

/// Structured prompt handed to the decision backend.
#[derive(Debug, Clone, Copy)]
pub struct DecisionPrompt<'a> {
    pub query: &'a str,
    pub state: &'a ResolvedState,
    pub candidates: &'a [AgentDescriptor],
}

impl DecisionPrompt<'_> {
    /// Canonical text rendering for LLM backends.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "query: {}", self.query);
        let _ = writeln!(
            out,
            "state: {}",
            self.state
                .atomics
                .iter()
                .cloned()
                .collect::<Vec<_>>()
                .join("+")
        );
        let _ = writeln!(out, "candidates:");
        for c in self.candidates {
            let params: Vec<String> = c
                .input_params
                .iter()
                .map(|p| format!("{}: {}", p.name, p.type_tag))
                .collect();
            let _ = writeln!(out, "- {} ({}) [{}]", c.name, c.description, params.join(", "));
        }
        out.push_str("answer with exactly one candidate name");
        out
    }
}

/// One scored token from a backend.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenLogit {
    pub token: String,
    pub logit: f64,
}

/// Ranker/decision-maker contract: prompt in, token logits out.
///
/// Backends may emit tokens outside the candidate set; those positions are
/// masked to -inf and can never be chosen.
pub trait DecisionBackend: Send + Sync {
    fn name(&self) -> &str;
    fn score(&self, prompt: &DecisionPrompt<'_>) -> Result<Vec<TokenLogit>>;
}

/// Default deterministic backend: logits are scaled cosine similarities
/// between the query and each candidate's description.
pub struct SimilarityBackend {
    encoder: SharedEncoder,
    scale: f64,
}

impl SimilarityBackend {
    pub const DEFAULT_SCALE: f64 = 10.0;

    pub fn new(encoder: SharedEncoder) -> Self {
        SimilarityBackend {
            encoder,
            scale: Self::DEFAULT_SCALE,
        }
    }
}

impl DecisionBackend for SimilarityBackend {
    fn name(&self) -> &str {
        "similarity"
    }

    fn score(&self, prompt: &DecisionPrompt<'_>) -> Result<Vec<TokenLogit>> {
        let query = self.encoder.encode(prompt.query);
        prompt
            .candidates
            .iter()
            .map(|c| {
                let sim = cosine_sim(&query, &self.encoder.encode(&c.description))?;
                Ok(TokenLogit {
                    token: c.name.clone(),
                    logit: self.scale * sim,
                })
            })
            .collect()
    }
}

/// Decision outcome with the masked probability table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecisionOutcome {
    pub chosen: String,
    /// (token, probability) over the decode vocabulary; masked tokens are 0.
    pub probabilities: Vec<(String, f64)>,
}

/// Run the backend over the candidates and decode under the availability
/// mask. The result is always one of the candidates.
pub fn final_decide(
    query: &str,
    state: &ResolvedState,
    candidates: &[AgentDescriptor],
    backend: &dyn DecisionBackend,
) -> Result<DecisionOutcome> {
    if candidates.is_empty() {
        return Err(Error::EmptyInput("decision candidates".into()));
    }
    let prompt = DecisionPrompt {
        query,
        state,
        candidates,
    };
    let scored = backend.score(&prompt).map_err(|e| Error::Backend {
        backend: backend.name().to_string(),
        message: e.to_string(),
    })?;
    for t in &scored {
        if !t.logit.is_finite() {
            return Err(Error::Backend {
                backend: backend.name().to_string(),
                message: format!("non-finite logit for token '{}'", t.token),
            });
        }
    }

    // vocabulary: candidates first, then any extra backend tokens
    let mut vocabulary: Vec<String> = candidates.iter().map(|c| c.name.clone()).collect();
    for t in &scored {
        if !vocabulary.contains(&t.token) {
            vocabulary.push(t.token.clone());
        }
    }
    let mut logits = vec![0.0; vocabulary.len()];
    for t in &scored {
        let idx = vocabulary.iter().position(|v| v == &t.token).unwrap();
        logits[idx] = t.logit;
    }
    let available: BTreeSet<String> = candidates.iter().map(|c| c.name.clone()).collect();
    let mask = build_mask(&vocabulary, &available)?;
    let (chosen_idx, probs) = masked_decode(&logits, &mask)?;
    Ok(DecisionOutcome {
        chosen: vocabulary[chosen_idx].clone(),
        probabilities: vocabulary.into_iter().zip(probs).collect(),
    })
}
