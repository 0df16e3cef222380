//! Generalized rating kernel: the trainable scoring head.
//!
//! A gating network picks the top-k experts for each encoded query; the
//! selected expert outputs are blended into M per-model score logits plus a
//! tie-threshold pre-activation. Pairwise comparison outcomes are modeled as
//! a five-class distribution over {tie, win, lose, strong win, strong lose}
//! (see [`outcome_distribution`]) and the head is trained by categorical
//! cross-entropy.

mod probs;
mod train;

pub use probs::{base_probs, outcome_distribution, strong_split, OutcomeDistribution};
pub use train::{
    loss_gradient, loss_grk, prepare_training_set, train, TrainConfig, TrainingExample,
    PROB_CLAMP,
};

use std::path::Path;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::encoder::Embedding;
use crate::error::{Error, Result};
use crate::numerics::{sigmoid, softplus};
use crate::persist::{ContainerReader, ContainerWriter};

/// Magic bytes of the router params file.
pub const PARAMS_MAGIC: [u8; 4] = *b"MOMA";

/// Softplus floor keeping theta representably above 1 even when the
/// pre-activation is so negative that softplus underflows to 0.
const MIN_SOFTPLUS: f64 = 1e-12;

const INIT_RANGE: f64 = 0.05;

/// Dense affine map `y = Wx + b` with row-major weights.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Affine {
    pub rows: usize,
    pub cols: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl Affine {
    pub(crate) fn zeros(rows: usize, cols: usize) -> Self {
        Affine {
            rows,
            cols,
            w: vec![0.0; rows * cols],
            b: vec![0.0; rows],
        }
    }

    pub(crate) fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Self {
        let dist = Uniform::new_inclusive(-INIT_RANGE, INIT_RANGE);
        Affine {
            rows,
            cols,
            w: (0..rows * cols).map(|_| dist.sample(rng)).collect(),
            b: (0..rows).map(|_| dist.sample(rng)).collect(),
        }
    }

    pub(crate) fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = self.b.clone();
        for (o, row) in out.iter_mut().zip(self.w.chunks_exact(self.cols)) {
            let mut acc = 0.0;
            for (wi, xi) in row.iter().zip(x) {
                acc += wi * xi;
            }
            *o += acc;
        }
        out
    }

    pub(crate) fn is_finite(&self) -> bool {
        self.w.iter().chain(&self.b).all(|v| v.is_finite())
    }

    pub(crate) fn param_count(&self) -> usize {
        self.w.len() + self.b.len()
    }
}

/// All trainable parameters plus the comparison hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RouterParams {
    dim: usize,
    num_models: usize,
    num_experts: usize,
    top_k: usize,
    kappa: f64,
    margin: f64,
    gate: Affine,
    experts: Vec<Affine>,
}

impl RouterParams {
    /// Seeded uniform init in [-0.05, 0.05].
    pub fn init(
        dim: usize,
        num_models: usize,
        num_experts: usize,
        top_k: usize,
        kappa: f64,
        margin: f64,
        seed: u64,
    ) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gate = Affine::random(num_experts, dim, &mut rng);
        let experts = (0..num_experts)
            .map(|_| Affine::random(num_models + 1, dim, &mut rng))
            .collect();
        Self::from_parts(dim, num_models, num_experts, top_k, kappa, margin, gate, experts)
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_parts(
        dim: usize,
        num_models: usize,
        num_experts: usize,
        top_k: usize,
        kappa: f64,
        margin: f64,
        gate: Affine,
        experts: Vec<Affine>,
    ) -> Result<Self> {
        if dim == 0 || num_models == 0 {
            return Err(Error::config("dim and model count must be positive"));
        }
        if top_k == 0 || top_k > num_experts {
            return Err(Error::config(format!(
                "top_k {top_k} outside 1..={num_experts}"
            )));
        }
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(Error::config(format!("kappa must be finite and > 0, got {kappa}")));
        }
        if !(margin >= 0.0) || !margin.is_finite() {
            return Err(Error::config(format!("margin must be finite and >= 0, got {margin}")));
        }
        let params = RouterParams {
            dim,
            num_models,
            num_experts,
            top_k,
            kappa,
            margin,
            gate,
            experts,
        };
        if params.gate.rows != num_experts
            || params.gate.cols != dim
            || params.experts.len() != num_experts
            || params
                .experts
                .iter()
                .any(|e| e.rows != num_models + 1 || e.cols != dim)
        {
            return Err(Error::Dimension("router params shape mismatch".into()));
        }
        if !params.gate.is_finite() || params.experts.iter().any(|e| !e.is_finite()) {
            return Err(Error::NonFinite("router params weights".into()));
        }
        Ok(params)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_models(&self) -> usize {
        self.num_models
    }

    pub fn num_experts(&self) -> usize {
        self.num_experts
    }

    pub fn top_k(&self) -> usize {
        self.top_k
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn param_count(&self) -> usize {
        self.gate.param_count() + self.experts.iter().map(Affine::param_count).sum::<usize>()
    }

    pub(crate) fn gate(&self) -> &Affine {
        &self.gate
    }

    pub(crate) fn experts(&self) -> &[Affine] {
        &self.experts
    }

    pub(crate) fn gate_mut(&mut self) -> &mut Affine {
        &mut self.gate
    }

    pub(crate) fn experts_mut(&mut self) -> &mut [Affine] {
        &mut self.experts
    }
}

/// Per-query head output: M score logits and the tie threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadOutput {
    pub scores: Vec<f64>,
    pub theta: f64,
}

/// Intermediate activations kept for backprop.
#[derive(Debug, Clone)]
pub(crate) struct ForwardTrace {
    pub gate_weights: Vec<f64>,
    /// Selected expert indices, strongest gate weight first.
    pub selected: Vec<usize>,
    /// Renormalized weights aligned with `selected`.
    pub blend: Vec<f64>,
    /// Outputs of the selected experts, aligned with `selected`.
    pub expert_out: Vec<Vec<f64>>,
    /// Blended output vector of length M+1.
    pub combined: Vec<f64>,
    pub theta: f64,
    /// True when the softplus floor kicked in (gradient through theta is 0).
    pub theta_clamped: bool,
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Indices of the k largest weights, ties broken toward the lower index.
fn top_k_indices(weights: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..weights.len()).collect();
    idx.sort_by(|&a, &b| {
        weights[b]
            .partial_cmp(&weights[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    idx.truncate(k);
    idx
}

pub(crate) fn forward_trace(params: &RouterParams, features: &Embedding) -> Result<ForwardTrace> {
    if features.dim() != params.dim {
        return Err(Error::Dimension(format!(
            "features dim {} != params dim {}",
            features.dim(),
            params.dim
        )));
    }
    let x = features.values();
    let gate_weights = softmax(&params.gate.apply(x));
    let selected = top_k_indices(&gate_weights, params.top_k);
    let picked: f64 = selected.iter().map(|&e| gate_weights[e]).sum();
    let blend: Vec<f64> = selected.iter().map(|&e| gate_weights[e] / picked).collect();

    let expert_out: Vec<Vec<f64>> = selected
        .iter()
        .map(|&e| params.experts[e].apply(x))
        .collect();
    let mut combined = vec![0.0; params.num_models + 1];
    for (w, out) in blend.iter().zip(&expert_out) {
        for (c, o) in combined.iter_mut().zip(out) {
            *c += w * o;
        }
    }
    if combined.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("head output".into()));
    }

    let raw_theta = combined[params.num_models];
    let sp = softplus(raw_theta);
    let theta_clamped = sp < MIN_SOFTPLUS;
    let theta = 1.0 + sp.max(MIN_SOFTPLUS);
    Ok(ForwardTrace {
        gate_weights,
        selected,
        blend,
        expert_out,
        combined,
        theta,
        theta_clamped,
    })
}

/// Run the head on encoded query features.
pub fn forward(params: &RouterParams, features: &Embedding) -> Result<HeadOutput> {
    let trace = forward_trace(params, features)?;
    let scores = trace.combined[..params.num_models].to_vec();
    Ok(HeadOutput {
        scores,
        theta: trace.theta,
    })
}

/// Derivative of theta with respect to its pre-activation.
pub(crate) fn theta_grad(trace: &ForwardTrace, params: &RouterParams) -> f64 {
    if trace.theta_clamped {
        0.0
    } else {
        sigmoid(trace.combined[params.num_models])
    }
}

/// Write params to the versioned binary container.
pub fn save_params(params: &RouterParams, path: impl AsRef<Path>) -> Result<()> {
    let mut w = ContainerWriter::new(PARAMS_MAGIC);
    w.push_u32(params.dim as u32);
    w.push_u32(params.num_experts as u32);
    w.push_u32(params.num_models as u32);
    w.push_u32(params.top_k as u32);
    w.push_f64(params.kappa);
    w.push_f64(params.margin);
    w.push_f64_slice(&params.gate.w);
    w.push_f64_slice(&params.gate.b);
    for e in &params.experts {
        w.push_f64_slice(&e.w);
        w.push_f64_slice(&e.b);
    }
    crate::error::write_file(path.as_ref(), w.finish())?;
    Ok(())
}

/// Read params back; rejects bad magic, version, checksum, or shape.
pub fn load_params(path: impl AsRef<Path>) -> Result<RouterParams> {
    let data = crate::error::read_file_bytes(path.as_ref())?;
    let mut r = ContainerReader::open(&data, PARAMS_MAGIC)?;
    let dim = r.read_u32()? as usize;
    let num_experts = r.read_u32()? as usize;
    let num_models = r.read_u32()? as usize;
    let top_k = r.read_u32()? as usize;
    let kappa = r.read_f64()?;
    let margin = r.read_f64()?;
    let gate = Affine {
        rows: num_experts,
        cols: dim,
        w: r.read_f64_vec(num_experts * dim)?,
        b: r.read_f64_vec(num_experts)?,
    };
    let mut experts = Vec::with_capacity(num_experts);
    for _ in 0..num_experts {
        experts.push(Affine {
            rows: num_models + 1,
            cols: dim,
            w: r.read_f64_vec((num_models + 1) * dim)?,
            b: r.read_f64_vec(num_models + 1)?,
        });
    }
    r.finish()?;
    RouterParams::from_parts(dim, num_models, num_experts, top_k, kappa, margin, gate, experts)
}
