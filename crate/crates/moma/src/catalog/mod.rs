//! Registries and data ingestion: model profiles with token prices, agent
//! descriptors, categories, comparison datasets, and per-query cost estimation.
//!
//! File formats:
//! - model catalog: JSON array of profiles
//! - comparisons: one JSON record per line (UTF-8)
//! - agent registry: one JSON descriptor per line

mod currency;

pub use currency::{Currency, PRICE_SCALE};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One candidate LLM with its token prices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelProfile {
    pub id: String,
    pub display_name: String,
    /// Price per 1K input tokens.
    #[serde(rename = "input_price_per_1k")]
    pub input_price: Currency,
    /// Price per 1K output tokens.
    #[serde(rename = "output_price_per_1k")]
    pub output_price: Currency,
    #[serde(default)]
    pub tags: BTreeSet<String>,
}

impl ModelProfile {
    fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::data_format("model profile with empty id"));
        }
        if self.input_price.is_negative() || self.output_price.is_negative() {
            return Err(Error::data_format(format!(
                "model '{}' has a negative price",
                self.id
            )));
        }
        Ok(())
    }
}

/// Five-class outcome of a pairwise model comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum OutcomeLabel {
    /// The two models perform comparably.
    Tie,
    /// Model a outperforms model b.
    WinA,
    /// Model b outperforms model a.
    WinB,
    /// Model a significantly outperforms model b.
    StrongWinA,
    /// Model b significantly outperforms model a.
    StrongWinB,
}

impl OutcomeLabel {
    pub const COUNT: usize = 5;

    /// Index into a five-class probability vector.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Result<Self> {
        Self::try_from(u8::try_from(i).map_err(|_| bad_label(i as i64))?)
            .map_err(|_| bad_label(i as i64))
    }
}

fn bad_label(v: i64) -> Error {
    Error::data_format(format!("label {v} outside 0..=4"))
}

impl TryFrom<u8> for OutcomeLabel {
    type Error = Error;
    fn try_from(v: u8) -> Result<Self> {
        match v {
            0 => Ok(OutcomeLabel::Tie),
            1 => Ok(OutcomeLabel::WinA),
            2 => Ok(OutcomeLabel::WinB),
            3 => Ok(OutcomeLabel::StrongWinA),
            4 => Ok(OutcomeLabel::StrongWinB),
            v => Err(bad_label(v as i64)),
        }
    }
}

impl From<OutcomeLabel> for u8 {
    fn from(l: OutcomeLabel) -> u8 {
        l as u8
    }
}

/// One training quadruple: query, model pair, judged outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRecord {
    #[serde(rename = "query")]
    pub query_text: String,
    pub model_a: String,
    pub model_b: String,
    pub label: OutcomeLabel,
}

impl ComparisonRecord {
    pub fn validate(&self) -> Result<()> {
        if self.query_text.is_empty() {
            return Err(Error::data_format("empty query text"));
        }
        if self.model_a == self.model_b {
            return Err(Error::data_format(format!(
                "model_a == model_b ('{}')",
                self.model_a
            )));
        }
        Ok(())
    }
}

/// A typed parameter in an agent's interface description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    #[serde(rename = "type")]
    pub type_tag: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentStatus {
    Active,
    Inactive,
}

/// Registry entry for one agent.
///
/// Names are dot-separated; the first segment is the routing prefix
/// (`travel.flight_search` routes under `travel`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentDescriptor {
    pub name: String,
    pub description: String,
    #[serde(default)]
    pub input_params: Vec<ParamSpec>,
    #[serde(default)]
    pub output_params: Vec<ParamSpec>,
    #[serde(default)]
    pub few_shot_examples: Vec<String>,
    pub status: AgentStatus,
    #[serde(default)]
    pub category_ids: BTreeSet<String>,
}

impl AgentDescriptor {
    pub fn is_active(&self) -> bool {
        self.status == AgentStatus::Active
    }

    /// Routing prefix: the first dot-separated segment of the name, lowercased.
    pub fn prefix(&self) -> String {
        self.name
            .split('.')
            .next()
            .unwrap_or(&self.name)
            .to_lowercase()
    }

    fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::data_format("agent with empty name"));
        }
        if self.description.is_empty() {
            return Err(Error::data_format(format!(
                "agent '{}' has an empty description",
                self.name
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CategorySource {
    Predefined,
    Clustered,
}

/// One entry of the two-layer routing category system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Category {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub source: CategorySource,
}

impl Category {
    /// Text embedded for retrieval: name plus description.
    pub fn embedding_text(&self) -> String {
        if self.description.is_empty() {
            self.name.clone()
        } else {
            format!("{} {}", self.name, self.description)
        }
    }

    fn validate(&self) -> Result<()> {
        if self.id.is_empty() || self.name.is_empty() {
            return Err(Error::data_format("category with empty id or name"));
        }
        Ok(())
    }
}

/// User routing preference for LLM selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PreferenceMode {
    CostPriority {
        #[serde(skip_serializing_if = "Option::is_none")]
        budget: Option<Currency>,
    },
    Auto,
    PerformancePriority,
}

impl PreferenceMode {
    pub fn cost_priority(budget: Option<Currency>) -> Result<Self> {
        if let Some(b) = budget {
            if b <= Currency::ZERO {
                return Err(Error::config(format!("cost budget must be > 0, got {b}")));
            }
        }
        Ok(PreferenceMode::CostPriority { budget })
    }
}

impl fmt::Display for PreferenceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PreferenceMode::CostPriority { .. } => write!(f, "cost_priority"),
            PreferenceMode::Auto => write!(f, "auto"),
            PreferenceMode::PerformancePriority => write!(f, "performance_priority"),
        }
    }
}

/// Indexed, validated model catalog snapshot.
#[derive(Debug, Clone)]
pub struct ModelCatalog {
    models: Vec<ModelProfile>,
    index: BTreeMap<String, usize>,
}

impl ModelCatalog {
    pub fn new(models: Vec<ModelProfile>) -> Result<Self> {
        let mut index = BTreeMap::new();
        for (i, m) in models.iter().enumerate() {
            m.validate()?;
            if index.insert(m.id.clone(), i).is_some() {
                return Err(Error::DuplicateId(m.id.clone()));
            }
        }
        Ok(ModelCatalog { models, index })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::new(load_model_catalog(path)?)
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn models(&self) -> &[ModelProfile] {
        &self.models
    }

    pub fn get(&self, id: &str) -> Option<&ModelProfile> {
        self.index.get(id).map(|&i| &self.models[i])
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn by_index(&self, i: usize) -> Option<&ModelProfile> {
        self.models.get(i)
    }
}

/// Load a model catalog file: a JSON array of profiles. An empty file is an
/// empty catalog. Prices are quantized half-even to the price scale.
pub fn load_model_catalog(path: impl AsRef<Path>) -> Result<Vec<ModelProfile>> {
    let raw = crate::error::read_file(path.as_ref())?;
    parse_model_catalog(&raw)
}

pub fn parse_model_catalog(raw: &str) -> Result<Vec<ModelProfile>> {
    if raw.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut models: Vec<ModelProfile> = serde_json::from_str(raw)
        .map_err(|e| Error::data_format(format!("model catalog: {e}")))?;
    let mut seen = BTreeSet::new();
    for m in &mut models {
        m.input_price = m.input_price.quantize_price();
        m.output_price = m.output_price.quantize_price();
        m.validate()?;
        if !seen.insert(m.id.clone()) {
            return Err(Error::DuplicateId(m.id.clone()));
        }
    }
    Ok(models)
}

pub fn write_model_catalog(path: impl AsRef<Path>, models: &[ModelProfile]) -> Result<()> {
    let body = serde_json::to_string_pretty(models)
        .map_err(|e| Error::data_format(format!("model catalog serialize: {e}")))?;
    crate::error::write_file(path.as_ref(), body + "\n")?;
    Ok(())
}

/// Load line-delimited comparison records; blank lines are skipped.
///
/// Invalid lines fail the load with their 1-based line number. When a catalog
/// is supplied, every referenced model id must exist in it.
pub fn load_comparisons(
    path: impl AsRef<Path>,
    catalog: Option<&ModelCatalog>,
) -> Result<Vec<ComparisonRecord>> {
    let raw = crate::error::read_file(path.as_ref())?;
    parse_comparisons(&raw, catalog)
}

pub fn parse_comparisons(
    raw: &str,
    catalog: Option<&ModelCatalog>,
) -> Result<Vec<ComparisonRecord>> {
    let mut records = Vec::new();
    for (lineno, line) in raw.lines().enumerate() {
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record: ComparisonRecord = serde_json::from_str(line)
            .map_err(|e| Error::data_format(format!("line {lineno}: {e}")))?;
        record
            .validate()
            .map_err(|e| Error::data_format(format!("line {lineno}: {e}")))?;
        if let Some(cat) = catalog {
            for id in [&record.model_a, &record.model_b] {
                if cat.index_of(id).is_none() {
                    return Err(Error::UnknownModel(format!("line {lineno}: '{id}'")));
                }
            }
        }
        records.push(record);
    }
    Ok(records)
}

pub fn write_comparisons(path: impl AsRef<Path>, records: &[ComparisonRecord]) -> Result<()> {
    let mut out = String::new();
    for r in records {
        out.push_str(
            &serde_json::to_string(r)
                .map_err(|e| Error::data_format(format!("comparison serialize: {e}")))?,
        );
        out.push('\n');
    }
    crate::error::write_file(path.as_ref(), out)?;
    Ok(())
}

/// Load line-delimited agent descriptors; names must be unique.
pub fn load_agents(path: impl AsRef<Path>) -> Result<Vec<AgentDescriptor>> {
    let raw = crate::error::read_file(path.as_ref())?;
    parse_agents(&raw)
}

pub fn parse_agents(raw: &str) -> Result<Vec<AgentDescriptor>> {
    let mut agents = Vec::new();
    let mut seen = BTreeSet::new();
    for (lineno, line) in raw.lines().enumerate() {
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let agent: AgentDescriptor = serde_json::from_str(line)
            .map_err(|e| Error::data_format(format!("line {lineno}: {e}")))?;
        agent
            .validate()
            .map_err(|e| Error::data_format(format!("line {lineno}: {e}")))?;
        if !seen.insert(agent.name.clone()) {
            return Err(Error::DuplicateId(agent.name.clone()));
        }
        agents.push(agent);
    }
    Ok(agents)
}

pub fn write_agents(path: impl AsRef<Path>, agents: &[AgentDescriptor]) -> Result<()> {
    let mut out = String::new();
    for a in agents {
        out.push_str(
            &serde_json::to_string(a)
                .map_err(|e| Error::data_format(format!("agent serialize: {e}")))?,
        );
        out.push('\n');
    }
    crate::error::write_file(path.as_ref(), out)?;
    Ok(())
}

/// Load a JSON array of categories.
pub fn load_categories(path: impl AsRef<Path>) -> Result<Vec<Category>> {
    let raw = crate::error::read_file(path.as_ref())?;
    if raw.trim().is_empty() {
        return Ok(Vec::new());
    }
    let cats: Vec<Category> =
        serde_json::from_str(&raw).map_err(|e| Error::data_format(format!("categories: {e}")))?;
    let mut seen = BTreeSet::new();
    for c in &cats {
        c.validate()?;
        if !seen.insert(c.id.clone()) {
            return Err(Error::DuplicateId(c.id.clone()));
        }
    }
    Ok(cats)
}

/// Estimated inference cost for a query answered by `profile`.
///
/// `input_tokens / 1000 * input_price + output_tokens / 1000 * output_price`,
/// computed exactly (no rounding), so the estimate is linear in both token
/// counts.
pub fn estimate_cost(profile: &ModelProfile, input_tokens: u64, output_tokens: u64) -> Currency {
    profile.input_price.per_thousand_tokens(input_tokens)
        + profile.output_price.per_thousand_tokens(output_tokens)
}

/// Expected output length assumed when a request does not supply one.
pub const DEFAULT_OUTPUT_TOKENS: u64 = 512;
