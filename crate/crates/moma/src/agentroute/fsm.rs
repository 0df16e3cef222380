//! Context-aware state machine for intent resolution.
//!
//! Inputs pass two stages: ordered keyword/regex rules assign high-certainty
//! states, then embedding similarity against per-state prompts adds the
//! semantic argmax and any state above the composite threshold. The resolved
//! state is the union, falling back to `GENERIC_QUERY` when both stages come
//! up empty.

use std::collections::BTreeSet;
use std::path::Path;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::encoder::{cosine_sim, Embedding, Encoder};
use crate::error::{Error, Result};

pub const GENERIC_QUERY: &str = "GENERIC_QUERY";
pub const EVENT_TRIGGERED: &str = "EVENT_TRIGGERED";

/// One core intent with its descriptive prompt and precomputed embedding.
#[derive(Debug, Clone)]
pub struct AtomicState {
    pub name: String,
    pub prompt: String,
    pub prompt_embedding: Embedding,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatternKind {
    /// Case-insensitive substring match.
    Keyword,
    Regex,
}

/// One pre-filter rule; lower priority values fire first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionRule {
    pub kind: PatternKind,
    pub pattern: String,
    pub target: String,
    pub priority: u32,
}

/// Serialized form of the state machine (the `fsm` config file).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FsmSpec {
    pub states: Vec<StateSpec>,
    #[serde(default)]
    pub rules: Vec<TransitionRule>,
    #[serde(default = "default_tau")]
    pub composite_threshold: f64,
    #[serde(default = "default_alpha")]
    pub relevance_threshold: f64,
    #[serde(default = "default_top_k_categories")]
    pub top_k_categories: usize,
    #[serde(default = "default_top_k_agents")]
    pub top_k_agents: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateSpec {
    pub name: String,
    pub prompt: String,
}

fn default_tau() -> f64 {
    0.5
}
fn default_alpha() -> f64 {
    0.3
}
fn default_top_k_categories() -> usize {
    3
}
fn default_top_k_agents() -> usize {
    5
}

impl Default for FsmSpec {
    /// The built-in states and the path-upload rules.
    fn default() -> Self {
        let states = [
            (
                "PATH_UPLOAD",
                "upload a file or document from a local path or drive",
            ),
            (
                "TRAVEL_RELATED",
                "travel planning flights hotels trips itinerary booking",
            ),
            (
                "FINANCE_RELATED",
                "finance banking investing money stocks budget payments",
            ),
            (
                "FOOD_RELATED",
                "food restaurants dining recipes meals cuisine",
            ),
            (GENERIC_QUERY, "a general question or open request"),
            (EVENT_TRIGGERED, "a system event or scheduled trigger"),
        ];
        FsmSpec {
            states: states
                .iter()
                .map(|(name, prompt)| StateSpec {
                    name: name.to_string(),
                    prompt: prompt.to_string(),
                })
                .collect(),
            rules: vec![
                TransitionRule {
                    kind: PatternKind::Keyword,
                    pattern: "upload".into(),
                    target: "PATH_UPLOAD".into(),
                    priority: 0,
                },
                TransitionRule {
                    kind: PatternKind::Keyword,
                    pattern: "c:\\".into(),
                    target: "PATH_UPLOAD".into(),
                    priority: 1,
                },
                TransitionRule {
                    kind: PatternKind::Keyword,
                    pattern: "/".into(),
                    target: "PATH_UPLOAD".into(),
                    priority: 2,
                },
            ],
            composite_threshold: default_tau(),
            relevance_threshold: default_alpha(),
            top_k_categories: default_top_k_categories(),
            top_k_agents: default_top_k_agents(),
        }
    }
}

/// Validated state machine with compiled rules and embedded state prompts.
#[derive(Debug, Clone)]
pub struct StateMachineConfig {
    states: Vec<AtomicState>,
    rules: Vec<TransitionRule>,
    compiled: Vec<Option<Regex>>,
    pub composite_threshold: f64,
    pub relevance_threshold: f64,
    pub top_k_categories: usize,
    pub top_k_agents: usize,
}

impl StateMachineConfig {
    pub fn from_spec(spec: &FsmSpec, encoder: &dyn Encoder) -> Result<Self> {
        if spec.states.is_empty() || !spec.states.iter().any(|s| s.name == GENERIC_QUERY) {
            return Err(Error::config(format!(
                "state machine must define at least {GENERIC_QUERY}"
            )));
        }
        for t in [spec.composite_threshold, spec.relevance_threshold] {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::config(format!("threshold {t} outside (0, 1)")));
            }
        }
        let mut names = BTreeSet::new();
        let states: Vec<AtomicState> = spec
            .states
            .iter()
            .map(|s| AtomicState {
                name: s.name.clone(),
                prompt: s.prompt.clone(),
                prompt_embedding: encoder.encode(&s.prompt),
            })
            .collect();
        for s in &states {
            if !names.insert(s.name.clone()) {
                return Err(Error::DuplicateId(format!("state '{}'", s.name)));
            }
        }

        let mut rules = spec.rules.clone();
        rules.sort_by_key(|r| r.priority);
        let mut priorities = BTreeSet::new();
        let mut compiled = Vec::with_capacity(rules.len());
        for r in &rules {
            if !priorities.insert(r.priority) {
                return Err(Error::config(format!(
                    "duplicate rule priority {}",
                    r.priority
                )));
            }
            if !names.contains(&r.target) {
                return Err(Error::config(format!(
                    "rule targets unknown state '{}'",
                    r.target
                )));
            }
            compiled.push(match r.kind {
                PatternKind::Keyword => None,
                PatternKind::Regex => Some(Regex::new(&r.pattern).map_err(|e| {
                    Error::config(format!("invalid rule regex '{}': {e}", r.pattern))
                })?),
            });
        }

        Ok(StateMachineConfig {
            states,
            rules,
            compiled,
            composite_threshold: spec.composite_threshold,
            relevance_threshold: spec.relevance_threshold,
            top_k_categories: spec.top_k_categories,
            top_k_agents: spec.top_k_agents,
        })
    }

    pub fn load(path: impl AsRef<Path>, encoder: &dyn Encoder) -> Result<Self> {
        let raw = crate::error::read_file(path.as_ref())?;
        let spec: FsmSpec = serde_json::from_str(&raw)
            .map_err(|e| Error::data_format(format!("fsm config: {e}")))?;
        Self::from_spec(&spec, encoder)
    }

    pub fn default_with(encoder: &dyn Encoder) -> Result<Self> {
        Self::from_spec(&FsmSpec::default(), encoder)
    }

    pub fn states(&self) -> &[AtomicState] {
        &self.states
    }

    pub fn rules(&self) -> &[TransitionRule] {
        &self.rules
    }

    pub fn state(&self, name: &str) -> Option<&AtomicState> {
        self.states.iter().find(|s| s.name == name)
    }
}

/// Which stage(s) produced the resolved state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateProvenance {
    Rule,
    Semantic,
    Both,
    /// Neither stage fired; the generic fallback state was used.
    Fallback,
}

/// Resolved intent: a non-empty set of atomic states.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedState {
    pub atomics: BTreeSet<String>,
    pub provenance: StateProvenance,
}

impl ResolvedState {
    pub fn is_composite(&self) -> bool {
        self.atomics.len() > 1
    }

    pub fn contains(&self, name: &str) -> bool {
        self.atomics.contains(name)
    }

    /// Lowercased first-underscore-segment of each atomic, used as agent
    /// name prefixes by the action function (TRAVEL_RELATED -> "travel").
    pub fn prefix_tokens(&self) -> BTreeSet<String> {
        self.atomics
            .iter()
            .map(|a| {
                a.split('_')
                    .next()
                    .unwrap_or(a.as_str())
                    .to_lowercase()
            })
            .collect()
    }
}

/// Resolve a query string into atomic states.
///
/// Rule matches are always included. The semantic stage contributes the
/// argmax state (when its similarity is positive) plus every state at or
/// above the composite threshold. An empty union falls back to
/// `GENERIC_QUERY`.
pub fn resolve_state(
    input: &str,
    cfg: &StateMachineConfig,
    encoder: &dyn Encoder,
) -> ResolvedState {
    let mut rule_states: BTreeSet<String> = BTreeSet::new();
    let lowered = input.to_lowercase();
    for (rule, compiled) in cfg.rules.iter().zip(&cfg.compiled) {
        let hit = match rule.kind {
            PatternKind::Keyword => lowered.contains(&rule.pattern.to_lowercase()),
            PatternKind::Regex => compiled.as_ref().is_some_and(|re| re.is_match(input)),
        };
        if hit {
            rule_states.insert(rule.target.clone());
        }
    }

    let mut semantic_states: BTreeSet<String> = BTreeSet::new();
    let query = encoder.encode(input);
    if !query.is_zero() {
        let mut best: Option<(usize, f64)> = None;
        for (i, state) in cfg.states.iter().enumerate() {
            let sim = cosine_sim(&query, &state.prompt_embedding).unwrap_or(0.0);
            if sim >= cfg.composite_threshold {
                semantic_states.insert(state.name.clone());
            }
            if sim > 0.0 && best.is_none_or(|(_, b)| sim > b) {
                best = Some((i, sim));
            }
        }
        if let Some((i, _)) = best {
            semantic_states.insert(cfg.states[i].name.clone());
        }
    }

    let provenance = match (rule_states.is_empty(), semantic_states.is_empty()) {
        (false, false) => StateProvenance::Both,
        (false, true) => StateProvenance::Rule,
        (true, false) => StateProvenance::Semantic,
        (true, true) => {
            return ResolvedState {
                atomics: BTreeSet::from([GENERIC_QUERY.to_string()]),
                provenance: StateProvenance::Fallback,
            }
        }
    };
    let mut atomics = rule_states;
    atomics.extend(semantic_states);
    ResolvedState {
        atomics,
        provenance,
    }
}

/// Event ingestion stub: a named system event resolves to `EVENT_TRIGGERED`
/// plus the event's own state when one is defined.
pub fn resolve_event(event: &str, cfg: &StateMachineConfig) -> ResolvedState {
    let mut atomics = BTreeSet::from([EVENT_TRIGGERED.to_string()]);
    if cfg.state(event).is_some() {
        atomics.insert(event.to_string());
    }
    ResolvedState {
        atomics,
        provenance: StateProvenance::Rule,
    }
}
