//! Gateway configuration: a TOML document with one table per subsystem.
//! Every field has a default, so an empty (or absent) file is valid. The
//! `MOMA_CONFIG` environment variable supplies the config path when the
//! caller does not pass one explicitly.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CONFIG_ENV_VAR: &str = "MOMA_CONFIG";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GatewayConfig {
    pub encoder: EncoderConfig,
    pub grk: GrkConfig,
    pub fsm: FsmConfig,
    pub categories: CategoriesConfig,
    pub cache: CacheConfig,
    pub selector: SelectorConfig,
    pub cost: CostConfig,
    /// Whole-word abbreviation expansions used by query normalization.
    pub abbreviations: BTreeMap<String, String>,
    pub paths: PathsConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EncoderConfig {
    pub dim: usize,
    pub seed: u64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig { dim: 256, seed: 42 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GrkConfig {
    pub experts: usize,
    pub top_k: usize,
    pub kappa: f64,
    pub margin: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
}

impl Default for GrkConfig {
    fn default() -> Self {
        GrkConfig {
            experts: 4,
            top_k: 2,
            kappa: 1.0,
            margin: 0.0,
            learning_rate: 0.05,
            batch_size: 32,
            epochs: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FsmConfig {
    pub composite_threshold: f64,
    pub relevance_threshold: f64,
    pub top_k_categories: usize,
    pub top_k_agents: usize,
}

impl Default for FsmConfig {
    fn default() -> Self {
        FsmConfig {
            composite_threshold: 0.5,
            relevance_threshold: 0.3,
            top_k_categories: 3,
            top_k_agents: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CategoriesConfig {
    pub redundancy_threshold: f64,
    pub registration_threshold: f64,
    /// Number of bottom-up clusters; defaults to ceil(sqrt(agent count)).
    pub cluster_count: Option<usize>,
}

impl Default for CategoriesConfig {
    fn default() -> Self {
        CategoriesConfig {
            redundancy_threshold: crate::agentroute::DEFAULT_REDUNDANCY_THRESHOLD,
            registration_threshold: crate::agentroute::DEFAULT_REGISTRATION_THRESHOLD,
            cluster_count: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CacheConfig {
    pub capacity: usize,
    pub semantic: bool,
    pub semantic_threshold: f64,
}

impl Default for CacheConfig {
    fn default() -> Self {
        CacheConfig {
            capacity: crate::cache::DEFAULT_CAPACITY,
            semantic: false,
            semantic_threshold: crate::cache::DEFAULT_SEMANTIC_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectorConfig {
    /// (cost, score) weights for automatic routing.
    pub auto_weights: [f64; 2],
    /// (cost, score) weights for cost-priority routing.
    pub cost_weights: [f64; 2],
}

impl Default for SelectorConfig {
    fn default() -> Self {
        SelectorConfig {
            auto_weights: [
                crate::selector::AUTO_WEIGHTS.0,
                crate::selector::AUTO_WEIGHTS.1,
            ],
            cost_weights: [
                crate::selector::COST_PRIORITY_WEIGHTS.0,
                crate::selector::COST_PRIORITY_WEIGHTS.1,
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostConfig {
    /// Expected output length when a request does not supply one.
    pub default_output_tokens: u64,
}

impl Default for CostConfig {
    fn default() -> Self {
        CostConfig {
            default_output_tokens: crate::catalog::DEFAULT_OUTPUT_TOKENS,
        }
    }
}

/// Optional data-file locations, so embedders (CLI, FFI) can assemble a
/// gateway from the config alone.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PathsConfig {
    pub catalog: Option<PathBuf>,
    pub params: Option<PathBuf>,
    pub agents: Option<PathBuf>,
    pub fsm: Option<PathBuf>,
    pub categories: Option<PathBuf>,
}

impl GatewayConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let raw = crate::error::read_file(path.as_ref())?;
        let config: GatewayConfig = toml::from_str(&raw)
            .map_err(|e| Error::data_format(format!("config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    /// Explicit path, else `MOMA_CONFIG`, else defaults.
    pub fn resolve(explicit: Option<&Path>) -> Result<Self> {
        if let Some(path) = explicit {
            return Self::load(path);
        }
        if let Ok(path) = std::env::var(CONFIG_ENV_VAR) {
            if !path.is_empty() {
                return Self::load(path);
            }
        }
        Ok(GatewayConfig::default())
    }

    pub fn validate(&self) -> Result<()> {
        if self.encoder.dim < crate::encoder::MIN_HASH_DIM {
            return Err(Error::config(format!(
                "encoder dim {} below minimum {}",
                self.encoder.dim,
                crate::encoder::MIN_HASH_DIM
            )));
        }
        if self.grk.experts == 0 || self.grk.top_k == 0 || self.grk.top_k > self.grk.experts {
            return Err(Error::config(format!(
                "grk top_k {} outside 1..={}",
                self.grk.top_k, self.grk.experts
            )));
        }
        if !(self.grk.kappa > 0.0) {
            return Err(Error::config("grk kappa must be > 0"));
        }
        if !(self.grk.margin >= 0.0) {
            return Err(Error::config("grk margin must be >= 0"));
        }
        for t in [
            self.fsm.composite_threshold,
            self.fsm.relevance_threshold,
            self.categories.redundancy_threshold,
            self.categories.registration_threshold,
        ] {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::config(format!("threshold {t} outside (0, 1)")));
            }
        }
        if self.cache.capacity == 0 {
            return Err(Error::Capacity);
        }
        for w in [self.selector.auto_weights, self.selector.cost_weights] {
            crate::selector::Weights::new(w[0], w[1])?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_all_defaults() {
        let config: GatewayConfig = toml::from_str("").unwrap();
        assert_eq!(config, GatewayConfig::default());
        assert!(config.validate().is_ok());
    }

    #[test]
    fn partial_overrides_keep_other_defaults() {
        let raw = r#"
            [encoder]
            dim = 512

            [cache]
            capacity = 100

            [abbreviations]
            pls = "please"
        "#;
        let config: GatewayConfig = toml::from_str(raw).unwrap();
        assert_eq!(config.encoder.dim, 512);
        assert_eq!(config.encoder.seed, 42);
        assert_eq!(config.cache.capacity, 100);
        assert_eq!(config.grk.experts, 4);
        assert_eq!(config.abbreviations["pls"], "please");
    }

    #[test]
    fn invalid_values_rejected() {
        let mut config = GatewayConfig::default();
        config.grk.top_k = 9;
        assert!(config.validate().is_err());
        let mut config = GatewayConfig::default();
        config.fsm.relevance_threshold = 0.0;
        assert!(config.validate().is_err());
        let mut config = GatewayConfig::default();
        config.cache.capacity = 0;
        assert!(config.validate().is_err());
    }

    #[test]
    fn env_var_supplies_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("moma.toml");
        std::fs::write(&path, "[encoder]\ndim = 64\n").unwrap();
        std::env::set_var(CONFIG_ENV_VAR, &path);
        let config = GatewayConfig::resolve(None).unwrap();
        std::env::remove_var(CONFIG_ENV_VAR);
        assert_eq!(config.encoder.dim, 64);
    }
}
