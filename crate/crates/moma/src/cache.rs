//! Prefetch cache: normalized query -> final agent list.
//!
//! A hit bypasses both routing layers. Keys are exact normalized strings;
//! an opt-in semantic fallback matches by embedding similarity. Eviction is
//! LRU. Registry changes invalidate the whole cache via a generation counter.

use std::collections::{BTreeMap, HashMap};
use std::time::SystemTime;

use serde::Serialize;

use crate::encoder::{cosine_sim, Embedding, SharedEncoder};
use crate::error::{Error, Result};

pub const DEFAULT_CAPACITY: usize = 10_000;
pub const DEFAULT_SEMANTIC_THRESHOLD: f64 = 0.95;

/// Whole-word abbreviation expansions applied during normalization.
///
/// Keys and values are themselves normalized at construction, and a value may
/// not contain another key, so normalization stays idempotent for any map.
#[derive(Debug, Clone, Default)]
pub struct AbbreviationMap {
    map: BTreeMap<String, String>,
}

impl AbbreviationMap {
    pub fn new(entries: impl IntoIterator<Item = (String, String)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (k, v) in entries {
            let key = base_normalize(&k);
            let value = base_normalize(&v);
            if key.is_empty() || key.contains(' ') {
                return Err(Error::config(format!(
                    "abbreviation key '{k}' must be a single word"
                )));
            }
            map.insert(key, value);
        }
        for value in map.values() {
            for word in value.split(' ') {
                if map.contains_key(word) {
                    return Err(Error::config(format!(
                        "abbreviation expansion '{value}' contains another key '{word}'"
                    )));
                }
            }
        }
        Ok(AbbreviationMap { map })
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    fn expand(&self, word: &str) -> Option<&str> {
        self.map.get(word).map(String::as_str)
    }
}

fn base_normalize(text: &str) -> String {
    text.to_lowercase()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

/// Lowercase, collapse whitespace runs, trim, expand whole-word
/// abbreviations. Idempotent.
pub fn normalize_query(text: &str, abbreviations: &AbbreviationMap) -> String {
    let base = base_normalize(text);
    if abbreviations.is_empty() {
        return base;
    }
    base.split(' ')
        .map(|w| abbreviations.expand(w).unwrap_or(w))
        .collect::<Vec<_>>()
        .join(" ")
        .trim()
        .to_string()
}

#[derive(Debug, Clone)]
pub struct CacheEntry {
    pub key: String,
    pub value: Vec<String>,
    pub created_at: SystemTime,
    pub hit_count: u64,
    embedding: Option<Embedding>,
    last_used: u64,
}

/// Cache counters for the `cache stats` report.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CacheStats {
    pub entries: usize,
    pub hits: u64,
    pub misses: u64,
    pub evictions: u64,
}

impl CacheStats {
    pub fn hit_rate(&self) -> f64 {
        let total = self.hits + self.misses;
        if total == 0 {
            0.0
        } else {
            self.hits as f64 / total as f64
        }
    }
}

/// LRU cache over normalized keys.
pub struct PrefetchCache {
    entries: HashMap<String, CacheEntry>,
    /// recency tick -> key; the smallest tick is the LRU victim.
    recency: BTreeMap<u64, String>,
    tick: u64,
    capacity: usize,
    stats: CacheStats,
    generation: u64,
    semantic: Option<SemanticLookup>,
}

struct SemanticLookup {
    encoder: SharedEncoder,
    threshold: f64,
}

impl PrefetchCache {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Capacity);
        }
        Ok(PrefetchCache {
            entries: HashMap::new(),
            recency: BTreeMap::new(),
            tick: 0,
            capacity,
            stats: CacheStats::default(),
            generation: 0,
            semantic: None,
        })
    }

    /// Enable similarity matching on exact-key misses.
    pub fn with_semantic_lookup(mut self, encoder: SharedEncoder, threshold: f64) -> Self {
        self.semantic = Some(SemanticLookup { encoder, threshold });
        self
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn stats(&self) -> CacheStats {
        CacheStats {
            entries: self.entries.len(),
            ..self.stats
        }
    }

    fn touch(&mut self, key: &str) {
        if let Some(entry) = self.entries.get_mut(key) {
            self.recency.remove(&entry.last_used);
            self.tick += 1;
            entry.last_used = self.tick;
            self.recency.insert(self.tick, key.to_string());
        }
    }

    /// Exact lookup on the normalized key, falling back to the semantic index
    /// when enabled. A hit bumps recency and the entry's hit count.
    pub fn lookup(&mut self, key: &str) -> Option<Vec<String>> {
        let hit_key = if self.entries.contains_key(key) {
            Some(key.to_string())
        } else {
            self.semantic_match(key)
        };
        match hit_key {
            Some(k) => {
                self.touch(&k);
                let entry = self.entries.get_mut(&k).expect("touched key exists");
                entry.hit_count += 1;
                self.stats.hits += 1;
                Some(entry.value.clone())
            }
            None => {
                self.stats.misses += 1;
                None
            }
        }
    }

    fn semantic_match(&self, key: &str) -> Option<String> {
        let semantic = self.semantic.as_ref()?;
        let query = semantic.encoder.encode(key);
        if query.is_zero() {
            return None;
        }
        let mut best: Option<(f64, &str)> = None;
        for entry in self.entries.values() {
            let Some(emb) = &entry.embedding else {
                continue;
            };
            let sim = cosine_sim(&query, emb).unwrap_or(0.0);
            if sim >= semantic.threshold
                && best.is_none_or(|(b, bk)| sim > b || (sim == b && entry.key.as_str() < bk))
            {
                best = Some((sim, &entry.key));
            }
        }
        best.map(|(_, k)| k.to_string())
    }

    /// Insert or replace; evicts the least-recently-used entry at capacity.
    /// Keys must already be normalized.
    pub fn insert(&mut self, key: &str, agents: Vec<String>) {
        debug_assert!(!agents.is_empty(), "cache values are non-empty agent lists");
        debug_assert_eq!(key, base_normalize(key), "cache keys must be normalized");
        if let Some(existing) = self.entries.get(key) {
            self.recency.remove(&existing.last_used);
            self.entries.remove(key);
        } else if self.entries.len() >= self.capacity {
            if let Some((&oldest, _)) = self.recency.iter().next() {
                let victim = self.recency.remove(&oldest).expect("recency entry");
                self.entries.remove(&victim);
                self.stats.evictions += 1;
            }
        }
        self.tick += 1;
        let embedding = self.semantic.as_ref().map(|s| s.encoder.encode(key));
        self.entries.insert(
            key.to_string(),
            CacheEntry {
                key: key.to_string(),
                value: agents,
                created_at: SystemTime::now(),
                hit_count: 0,
                embedding,
                last_used: self.tick,
            },
        );
        self.recency.insert(self.tick, key.to_string());
    }

    pub fn clear(&mut self) {
        self.entries.clear();
        self.recency.clear();
    }

    /// Invalidate everything when the registry snapshot generation moves.
    pub fn sync_generation(&mut self, generation: u64) {
        if generation != self.generation {
            self.generation = generation;
            self.clear();
        }
    }
}
