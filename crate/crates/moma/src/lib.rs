//! moma: a query-routing engine over a heterogeneous pool of LLMs and agents.
//!
//! The engine answers one question per query: which execution unit should
//! handle it? Agent-eligible queries go through a two-layer selector
//! (category retrieval, then a context-aware state machine with logit-masked
//! final decoding); everything else is dispatched to the LLM whose predicted
//! score and token cost are jointly optimal on the Pareto frontier under the
//! caller's preference mode.
//!
//! Modules:
//! - [`catalog`]: model/agent/category registries, comparison datasets, cost estimation
//! - [`encoder`]: pluggable text-to-vector contract with a hashing default
//! - [`grk`]: the trainable scoring head and five-class comparison model
//! - [`elo`]: Elo ratings over comparison logs
//! - [`selector`]: Pareto frontier and TOPSIS selection with preference modes
//! - [`agentroute`]: categories, state machine, masking, final decision
//! - [`cache`]: prefetch cache keyed by normalized queries
//! - [`baselines`]: SFT-classification and contrastive pairwise routers
//! - [`gateway`]: end-to-end routing flow, configuration, evaluation harness

// config validation uses `!(x > 0.0)` so NaN is rejected alongside the
// out-of-range values; nested configs are adjusted field-by-field
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::field_reassign_with_default)]

pub mod agentroute;
pub mod baselines;
pub mod cache;
pub mod catalog;
pub mod elo;
pub mod encoder;
pub mod error;
pub mod gateway;
pub mod grk;
pub mod selector;

mod numerics;
mod persist;

pub use error::{Error, Result};
