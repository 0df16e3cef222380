//! End-to-end routing flow: agent-first with LLM fallback.
//!
//! A query is normalized, checked against the prefetch cache, then offered to
//! the agent path (category retrieval, state machine, candidate filtering,
//! masked final decision). Anything that falls through (no relevant
//! category, no candidates, a failing backend) degrades to the LLM path,
//! where the scoring head and the cost model feed the preference-aware
//! Pareto/TOPSIS selector. Every query yields a decision.

mod config;
mod harness;

pub use config::{
    CacheConfig, CategoriesConfig, CostConfig, EncoderConfig, FsmConfig, GatewayConfig, GrkConfig,
    PathsConfig, SelectorConfig, CONFIG_ENV_VAR,
};
pub use harness::{run_harness, HarnessConfig, HarnessReport, RouterMetrics};

use std::sync::{Arc, Mutex, RwLock};

use serde::Serialize;

use crate::agentroute::{
    candidate_agents, final_decide, first_layer_retrieve, resolve_state, AgentRegistry,
    DecisionBackend, FsmSpec, RegistrationOutcome, ResolvedState, SimilarityBackend,
    StateMachineConfig,
};
use crate::cache::{normalize_query, AbbreviationMap, CacheStats, PrefetchCache};
use crate::catalog::{
    estimate_cost, AgentDescriptor, Category, Currency, ModelCatalog, PreferenceMode,
};
use crate::encoder::{HashingEncoder, SharedEncoder};
use crate::error::{Error, Result};
use crate::grk::{forward, RouterParams};
use crate::selector::{
    select_with_preference_weights, ParetoPoint, SelectionResult, Weights,
};

/// Which execution class answered the query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RoutePath {
    Agent,
    Llm,
}

/// Everything observable about one routing decision.
#[derive(Debug, Clone, Serialize)]
pub struct RoutingDecision {
    pub path: RoutePath,
    /// Agent name or model id, depending on the path.
    pub chosen: String,
    pub preference: PreferenceMode,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Diagnostics {
    pub normalized_query: String,
    pub cache_hit: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolved_state: Option<ResolvedState>,
    /// (category id, similarity) from first-layer retrieval.
    pub categories: Vec<(String, f64)>,
    /// Ranked agent candidates (agent path) or cached list (cache hit).
    pub candidates: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selection: Option<SelectionResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimated_cost: Option<Currency>,
    /// Why the agent path (or a selection step) was abandoned, when it was.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fallback_cause: Option<String>,
}

/// Rough token estimate for raw query text: one token per four characters.
pub fn estimate_input_tokens(text: &str) -> u64 {
    (text.chars().count() as u64).div_ceil(4).max(1)
}

/// Immutable registries plus the one shared mutable structure (the cache).
pub struct GatewayState {
    config: GatewayConfig,
    encoder: SharedEncoder,
    catalog: Arc<ModelCatalog>,
    params: Option<Arc<RouterParams>>,
    fsm: StateMachineConfig,
    registry: RwLock<Arc<AgentRegistry>>,
    cache: Mutex<PrefetchCache>,
    abbreviations: AbbreviationMap,
    backend: Arc<dyn DecisionBackend>,
}

impl GatewayState {
    pub fn new(
        config: GatewayConfig,
        catalog: ModelCatalog,
        params: Option<RouterParams>,
        agents: Vec<AgentDescriptor>,
        predefined_categories: Vec<Category>,
        fsm_spec: Option<FsmSpec>,
    ) -> Result<Self> {
        config.validate()?;
        let encoder: SharedEncoder = Arc::new(HashingEncoder::new(
            config.encoder.dim,
            config.encoder.seed,
        )?);
        Self::with_encoder_and_backend(
            config,
            catalog,
            params,
            agents,
            predefined_categories,
            fsm_spec,
            encoder.clone(),
            Arc::new(SimilarityBackend::new(encoder)),
        )
    }

    /// Full-control constructor for embedders plugging in a real encoder or
    /// decision backend.
    #[allow(clippy::too_many_arguments)]
    pub fn with_encoder_and_backend(
        config: GatewayConfig,
        catalog: ModelCatalog,
        params: Option<RouterParams>,
        agents: Vec<AgentDescriptor>,
        predefined_categories: Vec<Category>,
        fsm_spec: Option<FsmSpec>,
        encoder: SharedEncoder,
        backend: Arc<dyn DecisionBackend>,
    ) -> Result<Self> {
        config.validate()?;
        if let Some(p) = &params {
            if p.dim() != encoder.dim() {
                return Err(Error::config(format!(
                    "params dim {} != encoder dim {}",
                    p.dim(),
                    encoder.dim()
                )));
            }
            if p.num_models() != catalog.len() {
                return Err(Error::config(format!(
                    "params cover {} models but catalog has {}",
                    p.num_models(),
                    catalog.len()
                )));
            }
        }
        let mut spec = fsm_spec.unwrap_or_default();
        spec.composite_threshold = config.fsm.composite_threshold;
        spec.relevance_threshold = config.fsm.relevance_threshold;
        spec.top_k_categories = config.fsm.top_k_categories;
        spec.top_k_agents = config.fsm.top_k_agents;
        let fsm = StateMachineConfig::from_spec(&spec, encoder.as_ref())?;
        let registry = AgentRegistry::build(
            agents,
            predefined_categories,
            config.categories.cluster_count,
            config.categories.redundancy_threshold,
            encoder.as_ref(),
        )?;
        let mut cache = PrefetchCache::new(config.cache.capacity)?;
        if config.cache.semantic {
            cache = cache.with_semantic_lookup(encoder.clone(), config.cache.semantic_threshold);
        }
        let abbreviations = AbbreviationMap::new(
            config
                .abbreviations
                .iter()
                .map(|(k, v)| (k.clone(), v.clone())),
        )?;
        Ok(GatewayState {
            config,
            encoder,
            catalog: Arc::new(catalog),
            params: params.map(Arc::new),
            fsm,
            registry: RwLock::new(Arc::new(registry)),
            cache: Mutex::new(cache),
            abbreviations,
            backend,
        })
    }

    pub fn config(&self) -> &GatewayConfig {
        &self.config
    }

    pub fn catalog(&self) -> &ModelCatalog {
        &self.catalog
    }

    pub fn encoder(&self) -> &SharedEncoder {
        &self.encoder
    }

    pub fn registry_snapshot(&self) -> Arc<AgentRegistry> {
        self.registry.read().expect("registry lock").clone()
    }

    pub fn cache_stats(&self) -> CacheStats {
        self.cache.lock().expect("cache lock").stats()
    }

    pub fn normalize(&self, query: &str) -> String {
        normalize_query(query, &self.abbreviations)
    }

    /// Register an agent: new registry snapshot swapped in atomically, cache
    /// invalidated via the generation counter.
    pub fn register_agent(
        &self,
        descriptor: AgentDescriptor,
    ) -> Result<RegistrationOutcome> {
        let mut slot = self.registry.write().expect("registry lock");
        let (next, outcome) = slot.register(
            descriptor,
            self.config.categories.registration_threshold,
            self.encoder.as_ref(),
        )?;
        let generation = next.generation();
        *slot = Arc::new(next);
        drop(slot);
        self.cache
            .lock()
            .expect("cache lock")
            .sync_generation(generation);
        Ok(outcome)
    }

    /// Route one query. Agent path first; every internal failure degrades to
    /// the LLM path with the cause recorded. Errors only when the LLM path is
    /// required but no trained params are loaded.
    pub fn route(&self, query: &str, preference: &PreferenceMode) -> Result<RoutingDecision> {
        let normalized = self.normalize(query);
        let registry = self.registry_snapshot();
        let mut diagnostics = Diagnostics {
            normalized_query: normalized.clone(),
            ..Diagnostics::default()
        };

        {
            let mut cache = self.cache.lock().expect("cache lock");
            cache.sync_generation(registry.generation());
            if let Some(agents) = cache.lookup(&normalized) {
                diagnostics.cache_hit = true;
                diagnostics.candidates = agents.clone();
                return Ok(RoutingDecision {
                    path: RoutePath::Agent,
                    chosen: agents[0].clone(),
                    preference: *preference,
                    diagnostics,
                });
            }
        }

        match self.try_agent_path(&normalized, &registry, &mut diagnostics) {
            Ok(Some(chosen)) => {
                return Ok(RoutingDecision {
                    path: RoutePath::Agent,
                    chosen,
                    preference: *preference,
                    diagnostics,
                });
            }
            Ok(None) => {}
            Err(e) => {
                diagnostics.fallback_cause = Some(e.to_string());
            }
        }

        self.llm_path(&normalized, preference, diagnostics)
    }

    /// Returns Ok(Some(agent)) on success, Ok(None) when the query is simply
    /// not agent-eligible, Err for internal failures worth recording.
    fn try_agent_path(
        &self,
        normalized: &str,
        registry: &AgentRegistry,
        diagnostics: &mut Diagnostics,
    ) -> Result<Option<String>> {
        let ranked = first_layer_retrieve(
            normalized,
            registry.categories(),
            &self.fsm,
            self.encoder.as_ref(),
        );
        diagnostics.categories = ranked
            .iter()
            .map(|(c, sim)| (c.id.clone(), *sim))
            .collect();
        if ranked.is_empty() {
            diagnostics.fallback_cause =
                Some("no category above the relevance threshold".into());
            return Ok(None);
        }

        let state = resolve_state(normalized, &self.fsm, self.encoder.as_ref());
        diagnostics.resolved_state = Some(state.clone());
        let candidates = candidate_agents(
            &state,
            &ranked,
            registry.agents(),
            &self.fsm,
            self.encoder.as_ref(),
            normalized,
        )?;
        diagnostics.candidates = candidates.iter().map(|c| c.name.clone()).collect();

        let outcome = match final_decide(normalized, &state, &candidates, self.backend.as_ref()) {
            Ok(outcome) => outcome,
            Err(Error::Backend { backend, message }) => {
                // configured backend failed; retry with the deterministic ranker
                diagnostics.fallback_cause = Some(format!(
                    "backend '{backend}' failed ({message}); used similarity ranker"
                ));
                let fallback = SimilarityBackend::new(self.encoder.clone());
                final_decide(normalized, &state, &candidates, &fallback)?
            }
            Err(e) => return Err(e),
        };

        // cache value: chosen first, remaining candidates by probability
        let mut ranked_names: Vec<(String, f64)> = outcome
            .probabilities
            .iter()
            .filter(|(name, _)| candidates.iter().any(|c| &c.name == name))
            .cloned()
            .collect();
        ranked_names.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.0.cmp(&b.0))
        });
        let mut list: Vec<String> = vec![outcome.chosen.clone()];
        list.extend(
            ranked_names
                .into_iter()
                .map(|(name, _)| name)
                .filter(|name| name != &outcome.chosen),
        );
        self.cache
            .lock()
            .expect("cache lock")
            .insert(normalized, list.clone());
        diagnostics.candidates = list;
        Ok(Some(outcome.chosen))
    }

    fn llm_path(
        &self,
        normalized: &str,
        preference: &PreferenceMode,
        mut diagnostics: Diagnostics,
    ) -> Result<RoutingDecision> {
        let params = self.params.as_ref().ok_or_else(|| {
            Error::config("LLM path required but no router params are loaded")
        })?;
        if self.catalog.is_empty() {
            return Err(Error::config("model catalog is empty"));
        }
        let features = self.encoder.encode(normalized);
        let head = forward(params, &features)?;
        let input_tokens = estimate_input_tokens(normalized);
        let output_tokens = self.config.cost.default_output_tokens;
        let points: Vec<ParetoPoint> = self
            .catalog
            .models()
            .iter()
            .enumerate()
            .map(|(i, m)| {
                ParetoPoint::new(
                    m.id.clone(),
                    estimate_cost(m, input_tokens, output_tokens),
                    head.scores[i],
                )
            })
            .collect();

        let auto_w = Weights::new(
            self.config.selector.auto_weights[0],
            self.config.selector.auto_weights[1],
        )?;
        let cost_w = Weights::new(
            self.config.selector.cost_weights[0],
            self.config.selector.cost_weights[1],
        )?;
        let selection =
            match select_with_preference_weights(&points, preference, auto_w, cost_w) {
                Ok(s) => s,
                Err(Error::BudgetInfeasible(limit)) => {
                    // fail open: cheapest model, cause recorded
                    diagnostics.fallback_cause = Some(format!(
                        "budget {limit} infeasible; selected the cheapest model"
                    ));
                    let cheapest = points
                        .iter()
                        .min_by(|a, b| {
                            a.cost
                                .cmp(&b.cost)
                                .then_with(|| a.model_id.cmp(&b.model_id))
                        })
                        .expect("non-empty catalog");
                    select_with_preference_weights(
                        std::slice::from_ref(cheapest),
                        &PreferenceMode::Auto,
                        auto_w,
                        cost_w,
                    )?
                }
                Err(e) => return Err(e),
            };

        let chosen_cost = points
            .iter()
            .find(|p| p.model_id == selection.chosen)
            .map(|p| p.cost);
        diagnostics.estimated_cost = chosen_cost;
        let chosen = selection.chosen.clone();
        diagnostics.selection = Some(selection);
        Ok(RoutingDecision {
            path: RoutePath::Llm,
            chosen,
            preference: *preference,
            diagnostics,
        })
    }
}
