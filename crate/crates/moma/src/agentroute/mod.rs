//! Two-layer agent selection.
//!
//! Layer one retrieves the most relevant categories for a query by embedding
//! similarity. Layer two resolves the query into atomic intent states with a
//! rule+semantic state machine, filters the agent pool by name prefix and
//! category membership, ranks the survivors by description similarity, and
//! lets a (pluggable) decision backend pick the final agent under a token
//! mask that makes invalid choices impossible.

mod categories;
mod decide;
mod fsm;
mod kmeans;
mod mask;

pub use categories::{
    build_categories, register_agent, CategoryBuild, RegistrationOutcome,
    DEFAULT_REDUNDANCY_THRESHOLD, DEFAULT_REGISTRATION_THRESHOLD,
};
pub use decide::{
    final_decide, DecisionBackend, DecisionOutcome, DecisionPrompt, SimilarityBackend, TokenLogit,
};
pub use fsm::{
    resolve_event, resolve_state, AtomicState, FsmSpec, PatternKind, ResolvedState, StateMachineConfig,
    StateProvenance, StateSpec, TransitionRule, EVENT_TRIGGERED, GENERIC_QUERY,
};
pub use kmeans::{kmeans, KmeansResult};
pub use mask::{build_mask, masked_decode, MaskVector};

use std::collections::BTreeSet;

use crate::catalog::{AgentDescriptor, Category};
use crate::encoder::{cosine_sim, Embedding, Encoder};
use crate::error::{Error, Result};

/// Rank categories for a query by descending cosine similarity and keep the
/// top `top_k_categories` entries strictly above the relevance threshold.
/// May be empty when everything falls below the threshold.
pub fn first_layer_retrieve(
    query: &str,
    categories: &[Category],
    cfg: &StateMachineConfig,
    encoder: &dyn Encoder,
) -> Vec<(Category, f64)> {
    let query_emb = encoder.encode(query);
    let embeddings: Vec<Embedding> = categories
        .iter()
        .map(|c| encoder.encode(&c.embedding_text()))
        .collect();
    rank_categories(&query_emb, categories, &embeddings, cfg)
}

fn rank_categories(
    query_emb: &Embedding,
    categories: &[Category],
    embeddings: &[Embedding],
    cfg: &StateMachineConfig,
) -> Vec<(Category, f64)> {
    let mut ranked: Vec<(usize, f64)> = categories
        .iter()
        .enumerate()
        .map(|(i, _)| (i, cosine_sim(query_emb, &embeddings[i]).unwrap_or(0.0)))
        .collect();
    ranked.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| categories[a.0].id.cmp(&categories[b.0].id))
    });
    ranked
        .into_iter()
        .filter(|&(_, sim)| sim > cfg.relevance_threshold)
        .take(cfg.top_k_categories)
        .map(|(i, sim)| (categories[i].clone(), sim))
        .collect()
}

/// Action function of the state machine: filter the registry by naming
/// prefix (from the resolved state) and category membership (from the ranked
/// categories), then keep the `top_k_agents` most query-similar survivors.
/// Inactive agents never qualify.
pub fn candidate_agents(
    state: &ResolvedState,
    ranked_categories: &[(Category, f64)],
    agents: &[AgentDescriptor],
    cfg: &StateMachineConfig,
    encoder: &dyn Encoder,
    query: &str,
) -> Result<Vec<AgentDescriptor>> {
    if agents.is_empty() {
        return Err(Error::EmptyInput("agent registry".into()));
    }
    let prefixes = state.prefix_tokens();
    let category_ids: BTreeSet<&str> = ranked_categories
        .iter()
        .map(|(c, _)| c.id.as_str())
        .collect();

    let matches = |a: &AgentDescriptor| -> bool {
        let prefix = a.prefix();
        prefixes.contains(&prefix)
            || a.category_ids.iter().any(|id| category_ids.contains(id.as_str()))
            || category_ids.contains(prefix.as_str())
    };

    let filtered: Vec<&AgentDescriptor> = agents
        .iter()
        .filter(|a| a.is_active() && matches(a))
        .collect();
    if filtered.is_empty() {
        return Err(Error::NoCandidate);
    }

    let query_emb = encoder.encode(query);
    let mut scored: Vec<(&AgentDescriptor, f64)> = filtered
        .into_iter()
        .map(|a| {
            let sim = cosine_sim(&query_emb, &encoder.encode(&a.description)).unwrap_or(0.0);
            (a, sim)
        })
        .collect();
    scored.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.0.name.cmp(&b.0.name))
    });
    scored.truncate(cfg.top_k_agents);
    Ok(scored.into_iter().map(|(a, _)| a.clone()).collect())
}

/// Immutable snapshot of the agent pool plus its category system.
///
/// Registration produces a fresh snapshot with a bumped generation; readers
/// keep using the old one until it is swapped in.
#[derive(Debug, Clone)]
pub struct AgentRegistry {
    agents: Vec<AgentDescriptor>,
    categories: Vec<Category>,
    generation: u64,
}

impl AgentRegistry {
    /// Build the registry: cluster the agents, merge with the predefined
    /// categories, and store the per-agent assignments.
    pub fn build(
        agents: Vec<AgentDescriptor>,
        predefined: Vec<Category>,
        cluster_count: Option<usize>,
        redundancy_threshold: f64,
        encoder: &dyn Encoder,
    ) -> Result<Self> {
        let mut agents = agents;
        agents.sort_by(|a, b| a.name.cmp(&b.name));
        let mut seen = BTreeSet::new();
        for a in &agents {
            if !seen.insert(a.name.clone()) {
                return Err(Error::DuplicateId(a.name.clone()));
            }
        }
        if agents.is_empty() {
            return Ok(AgentRegistry {
                agents,
                categories: predefined,
                generation: 0,
            });
        }
        let k = cluster_count
            .unwrap_or_else(|| (agents.len() as f64).sqrt().ceil() as usize)
            .clamp(1, agents.len());
        let build = build_categories(&agents, &predefined, k, redundancy_threshold, encoder)?;
        for a in &mut agents {
            a.category_ids = build.assignments[&a.name].clone();
        }
        Ok(AgentRegistry {
            agents,
            categories: build.categories,
            generation: 0,
        })
    }

    pub fn agents(&self) -> &[AgentDescriptor] {
        &self.agents
    }

    pub fn categories(&self) -> &[Category] {
        &self.categories
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn get(&self, name: &str) -> Option<&AgentDescriptor> {
        self.agents.iter().find(|a| a.name == name)
    }

    /// Register a new agent, assigning categories by similarity (or creating
    /// a new one). Returns the successor snapshot and what happened.
    pub fn register(
        &self,
        descriptor: AgentDescriptor,
        threshold: f64,
        encoder: &dyn Encoder,
    ) -> Result<(AgentRegistry, RegistrationOutcome)> {
        if self.get(&descriptor.name).is_some() {
            return Err(Error::DuplicateId(descriptor.name));
        }
        let outcome = register_agent(&descriptor, &self.categories, threshold, encoder)?;
        let mut next = self.clone();
        let mut descriptor = descriptor;
        match &outcome {
            RegistrationOutcome::Assigned { category_ids } => {
                descriptor.category_ids = category_ids.iter().cloned().collect();
            }
            RegistrationOutcome::NewCategory { category } => {
                descriptor.category_ids = BTreeSet::from([category.id.clone()]);
                next.categories.push(category.clone());
            }
        }
        let pos = next
            .agents
            .binary_search_by(|a| a.name.cmp(&descriptor.name))
            .unwrap_err();
        next.agents.insert(pos, descriptor);
        next.generation += 1;
        Ok((next, outcome))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{AgentStatus, CategorySource};
    use crate::encoder::HashingEncoder;

    fn encoder() -> HashingEncoder {
        HashingEncoder::new(128, 5).unwrap()
    }

    fn agent(name: &str, description: &str, active: bool) -> AgentDescriptor {
        AgentDescriptor {
            name: name.into(),
            description: description.into(),
            input_params: vec![],
            output_params: vec![],
            few_shot_examples: vec![],
            status: if active {
                AgentStatus::Active
            } else {
                AgentStatus::Inactive
            },
            category_ids: BTreeSet::new(),
        }
    }

    fn category(id: &str, name: &str, description: &str) -> Category {
        Category {
            id: id.into(),
            name: name.into(),
            description: description.into(),
            source: CategorySource::Predefined,
        }
    }

    fn fsm(encoder: &dyn Encoder) -> StateMachineConfig {
        StateMachineConfig::default_with(encoder).unwrap()
    }

    #[test]
    fn identical_text_ranks_first_with_near_one_similarity() {
        let enc = encoder();
        let cats = vec![
            category("travel", "Travel", "flights hotels trips"),
            category("food", "Food", "restaurants recipes meals"),
        ];
        let query = "Travel flights hotels trips";
        let ranked = first_layer_retrieve(query, &cats, &fsm(&enc), &enc);
        assert_eq!(ranked[0].0.id, "travel");
        assert!(ranked[0].1 > 0.999, "similarity {}", ranked[0].1);
    }

    #[test]
    fn impossible_threshold_returns_empty() {
        let enc = encoder();
        let cats = vec![category("travel", "Travel", "flights hotels trips")];
        let mut spec = FsmSpec::default();
        spec.relevance_threshold = 0.999_999;
        let cfg = StateMachineConfig::from_spec(&spec, &enc).unwrap();
        let ranked = first_layer_retrieve("something unrelated", &cats, &cfg, &enc);
        assert!(ranked.is_empty());
    }

    #[test]
    fn ranking_matches_brute_force_sort() {
        let enc = encoder();
        let cats: Vec<Category> = (0..6)
            .map(|i| {
                category(
                    &format!("c{i}"),
                    &format!("Topic {i}"),
                    &format!("words about subject number {i} and area {}", i * 2),
                )
            })
            .collect();
        let mut spec = FsmSpec::default();
        spec.top_k_categories = 4;
        spec.relevance_threshold = 0.000_001;
        let cfg = StateMachineConfig::from_spec(&spec, &enc).unwrap();
        let query = "words about subject number 3";
        let ranked = first_layer_retrieve(query, &cats, &cfg, &enc);

        let qe = enc.encode(query);
        let mut oracle: Vec<(String, f64)> = cats
            .iter()
            .map(|c| {
                (
                    c.id.clone(),
                    cosine_sim(&qe, &enc.encode(&c.embedding_text())).unwrap(),
                )
            })
            .collect();
        oracle.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
        let oracle_ids: Vec<&String> = oracle
            .iter()
            .filter(|(_, s)| *s > cfg.relevance_threshold)
            .take(4)
            .map(|(id, _)| id)
            .collect();
        let got_ids: Vec<&String> = ranked.iter().map(|(c, _)| &c.id).collect();
        assert_eq!(got_ids, oracle_ids);
    }

    fn travel_state() -> ResolvedState {
        ResolvedState {
            atomics: BTreeSet::from(["TRAVEL_RELATED".to_string()]),
            provenance: StateProvenance::Rule,
        }
    }

    #[test]
    fn all_inactive_agents_is_no_candidate() {
        let enc = encoder();
        let agents = vec![agent("travel.flights", "flights", false)];
        let err = candidate_agents(&travel_state(), &[], &agents, &fsm(&enc), &enc, "flights")
            .unwrap_err();
        assert!(matches!(err, Error::NoCandidate));
    }

    #[test]
    fn single_prefix_match_is_returned() {
        let enc = encoder();
        let agents = vec![
            agent("travel.flights", "search flights", true),
            agent("finance.budget", "track budgets", true),
        ];
        let got = candidate_agents(&travel_state(), &[], &agents, &fsm(&enc), &enc, "flights")
            .unwrap();
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].name, "travel.flights");
    }

    #[test]
    fn category_membership_also_matches() {
        let enc = encoder();
        let mut a = agent("tools.translate", "translate text between languages", true);
        a.category_ids = BTreeSet::from(["lang".to_string()]);
        let ranked = vec![(category("lang", "Languages", "translation words"), 0.9)];
        let state = ResolvedState {
            atomics: BTreeSet::from([GENERIC_QUERY.to_string()]),
            provenance: StateProvenance::Fallback,
        };
        let got = candidate_agents(&state, &ranked, &[a], &fsm(&enc), &enc, "translate this")
            .unwrap();
        assert_eq!(got[0].name, "tools.translate");
    }

    #[test]
    fn top_k_agents_matches_similarity_sort() {
        let enc = encoder();
        let agents: Vec<AgentDescriptor> = (0..5)
            .map(|i| {
                agent(
                    &format!("travel.a{i}"),
                    &format!("flights hotels topic {i} extra words {}", "pad ".repeat(i)),
                    true,
                )
            })
            .collect();
        let mut spec = FsmSpec::default();
        spec.top_k_agents = 2;
        let cfg = StateMachineConfig::from_spec(&spec, &enc).unwrap();
        let query = "flights hotels topic 2";
        let got = candidate_agents(&travel_state(), &[], &agents, &cfg, &enc, query).unwrap();
        assert_eq!(got.len(), 2);

        let qe = enc.encode(query);
        let mut oracle: Vec<(String, f64)> = agents
            .iter()
            .map(|a| {
                (
                    a.name.clone(),
                    cosine_sim(&qe, &enc.encode(&a.description)).unwrap(),
                )
            })
            .collect();
        oracle.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
        assert_eq!(got[0].name, oracle[0].0);
        assert_eq!(got[1].name, oracle[1].0);
    }

    #[test]
    fn registry_build_assigns_categories_and_register_adds_snapshots() {
        let enc = encoder();
        let agents = vec![
            agent("travel.flights", "search flights airlines tickets", true),
            agent("travel.hotels", "search hotels rooms nights", true),
            agent("food.recipes", "recipes cooking ingredients", true),
        ];
        let registry =
            AgentRegistry::build(agents, vec![], Some(2), 0.85, &enc).unwrap();
        assert_eq!(registry.generation(), 0);
        for a in registry.agents() {
            assert!(!a.category_ids.is_empty(), "agent {}", a.name);
        }

        let newcomer = agent("astro.horoscope", "zodiac astrology predictions", true);
        let (next, outcome) = registry.register(newcomer, 0.99, &enc).unwrap();
        assert_eq!(next.generation(), 1);
        assert!(matches!(outcome, RegistrationOutcome::NewCategory { .. }));
        assert!(next.get("astro.horoscope").is_some());
        assert!(registry.get("astro.horoscope").is_none(), "old snapshot untouched");
        assert!(!next.get("astro.horoscope").unwrap().category_ids.is_empty());

        let dup = agent("astro.horoscope", "again", true);
        assert!(matches!(
            next.register(dup, 0.5, &enc),
            Err(Error::DuplicateId(_))
        ));
    }
}
