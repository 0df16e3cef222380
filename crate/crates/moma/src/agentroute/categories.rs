//! Category construction (top-down predefined plus bottom-up clustered) and
//! agent registration.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use super::kmeans::kmeans;
use crate::catalog::{AgentDescriptor, Category, CategorySource};
use crate::encoder::{cosine_sim, Embedding, Encoder};
use crate::error::{Error, Result};

const KMEANS_MAX_ITER: usize = 50;
const KMEANS_SEED: u64 = 0x6d6f_6d61;
const NAME_KEYWORDS: usize = 3;
const DESCRIPTION_KEYWORDS: usize = 8;

/// Default similarity thresholds; both config-overridable.
pub const DEFAULT_REDUNDANCY_THRESHOLD: f64 = 0.85;
pub const DEFAULT_REGISTRATION_THRESHOLD: f64 = 0.4;

const STOPWORDS: &[&str] = &[
    "a", "an", "and", "are", "as", "at", "be", "by", "for", "from", "in", "into", "is", "it",
    "of", "on", "or", "that", "the", "their", "this", "to", "with", "your", "you", "will",
    "can", "all", "any", "its", "our", "via",
];

/// Top-n words of the given texts by term frequency, lowercased, stopwords
/// and one/two-letter tokens dropped, ties broken lexicographically.
pub(crate) fn top_keywords(texts: &[&str], n: usize) -> Vec<String> {
    let mut counts: HashMap<String, usize> = HashMap::new();
    for text in texts {
        for word in text
            .to_lowercase()
            .split(|c: char| !c.is_alphanumeric())
            .filter(|w| w.len() > 2 && !STOPWORDS.contains(w))
        {
            *counts.entry(word.to_string()).or_insert(0) += 1;
        }
    }
    let mut ranked: Vec<(String, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(n);
    ranked.into_iter().map(|(w, _)| w).collect()
}

fn slug(name: &str) -> String {
    name.split_whitespace().collect::<Vec<_>>().join("-")
}

/// Unique clustered-category id derived from the name.
fn clustered_id(name: &str, taken: &BTreeSet<String>) -> String {
    let base = format!("clustered.{}", slug(name));
    if !taken.contains(&base) {
        return base;
    }
    let mut i = 2;
    loop {
        let candidate = format!("{base}-{i}");
        if !taken.contains(&candidate) {
            return candidate;
        }
        i += 1;
    }
}

fn category_from_texts(texts: &[&str], fallback: &str, taken: &BTreeSet<String>) -> Category {
    let name_words = top_keywords(texts, NAME_KEYWORDS);
    let name = if name_words.is_empty() {
        fallback.to_string()
    } else {
        name_words.join(" ")
    };
    let description = top_keywords(texts, DESCRIPTION_KEYWORDS).join(" ");
    Category {
        id: clustered_id(&name, taken),
        name,
        description,
        source: CategorySource::Clustered,
    }
}

/// Category system plus per-agent assignments.
#[derive(Debug, Clone)]
pub struct CategoryBuild {
    pub categories: Vec<Category>,
    /// agent name -> ids of every category it belongs to (at least one).
    pub assignments: BTreeMap<String, BTreeSet<String>>,
}

/// Build the final category system from predefined categories plus k-means
/// clusters over agent-description embeddings.
///
/// Clustered categories that duplicate a predefined one (name+description
/// cosine at or above `redundancy_threshold`) are dropped; predefined
/// categories are never pruned. Every agent is then assigned to its nearest
/// surviving category, plus its own cluster's category when that survived and
/// any declared ids that exist.
pub fn build_categories(
    agents: &[AgentDescriptor],
    predefined: &[Category],
    k: usize,
    redundancy_threshold: f64,
    encoder: &dyn Encoder,
) -> Result<CategoryBuild> {
    if agents.is_empty() {
        return Err(Error::EmptyInput("agents".into()));
    }
    if !(redundancy_threshold > 0.0 && redundancy_threshold < 1.0) {
        return Err(Error::config(format!(
            "redundancy threshold {redundancy_threshold} outside (0, 1)"
        )));
    }

    let agent_embeddings: Vec<Embedding> = agents
        .iter()
        .map(|a| encoder.encode(&a.description))
        .collect();
    let clustering = kmeans(&agent_embeddings, k, KMEANS_MAX_ITER, KMEANS_SEED)?;
    let clusters = clustering.clusters(k);

    let predefined_embeddings: Vec<Embedding> = predefined
        .iter()
        .map(|c| encoder.encode(&c.embedding_text()))
        .collect();

    let mut taken: BTreeSet<String> = predefined.iter().map(|c| c.id.clone()).collect();
    let mut categories = predefined.to_vec();
    // cluster index -> surviving category id
    let mut cluster_category: Vec<Option<String>> = vec![None; k];
    for (ci, members) in clusters.iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        let texts: Vec<&str> = members
            .iter()
            .map(|&i| agents[i].description.as_str())
            .collect();
        let category = category_from_texts(&texts, &format!("group {ci}"), &taken);
        let emb = encoder.encode(&category.embedding_text());
        let redundant = predefined_embeddings
            .iter()
            .any(|pe| cosine_sim(&emb, pe).unwrap_or(0.0) >= redundancy_threshold);
        if redundant {
            continue;
        }
        taken.insert(category.id.clone());
        cluster_category[ci] = Some(category.id.clone());
        categories.push(category);
    }

    let category_embeddings: Vec<Embedding> = categories
        .iter()
        .map(|c| encoder.encode(&c.embedding_text()))
        .collect();
    let final_ids: BTreeSet<String> = categories.iter().map(|c| c.id.clone()).collect();

    let mut assignments: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for (i, agent) in agents.iter().enumerate() {
        let mut ids: BTreeSet<String> = agent
            .category_ids
            .iter()
            .filter(|id| final_ids.contains(*id))
            .cloned()
            .collect();
        if let Some(id) = &cluster_category[clustering.assignments[i]] {
            ids.insert(id.clone());
        }
        ids.insert(nearest_category(
            &agent_embeddings[i],
            &categories,
            &category_embeddings,
        ));
        assignments.insert(agent.name.clone(), ids);
    }

    Ok(CategoryBuild {
        categories,
        assignments,
    })
}

fn nearest_category(
    emb: &Embedding,
    categories: &[Category],
    category_embeddings: &[Embedding],
) -> String {
    let mut best = (0usize, f64::NEG_INFINITY);
    for (i, ce) in category_embeddings.iter().enumerate() {
        let sim = cosine_sim(emb, ce).unwrap_or(0.0);
        if sim > best.1 || (sim == best.1 && categories[i].id < categories[best.0].id) {
            best = (i, sim);
        }
    }
    categories[best.0].id.clone()
}

/// Outcome of registering one agent against the current category set.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum RegistrationOutcome {
    /// Assigned to every category at or above the threshold.
    Assigned { category_ids: Vec<String> },
    /// No category qualified; a fresh one was created from the description.
    NewCategory { category: Category },
}

/// Category assignment for a new agent: all categories whose embedding
/// similarity reaches `threshold`, or a new keyword-named category when none
/// qualifies.
pub fn register_agent(
    descriptor: &AgentDescriptor,
    categories: &[Category],
    threshold: f64,
    encoder: &dyn Encoder,
) -> Result<RegistrationOutcome> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::config(format!(
            "registration threshold {threshold} outside (0, 1)"
        )));
    }
    if descriptor.name.is_empty() || descriptor.description.is_empty() {
        return Err(Error::data_format(
            "agent descriptor needs a name and a description",
        ));
    }
    let emb = encoder.encode(&descriptor.description);
    let mut assigned: Vec<String> = categories
        .iter()
        .filter(|c| {
            cosine_sim(&emb, &encoder.encode(&c.embedding_text())).unwrap_or(0.0) >= threshold
        })
        .map(|c| c.id.clone())
        .collect();
    assigned.sort();
    if !assigned.is_empty() {
        return Ok(RegistrationOutcome::Assigned {
            category_ids: assigned,
        });
    }
    let taken: BTreeSet<String> = categories.iter().map(|c| c.id.clone()).collect();
    let category = category_from_texts(
        &[descriptor.description.as_str()],
        &descriptor.prefix(),
        &taken,
    );
    Ok(RegistrationOutcome::NewCategory { category })
}
