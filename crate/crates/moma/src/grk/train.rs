//! Categorical cross-entropy loss over comparison outcomes, analytic
//! gradients, and seeded mini-batch gradient descent.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{forward_trace, theta_grad, Affine, ForwardTrace, RouterParams};
use crate::catalog::{ComparisonRecord, ModelCatalog, OutcomeLabel};
use crate::encoder::{Embedding, Encoder};
use crate::error::{Error, Result};
use crate::grk::outcome_distribution;
use crate::numerics::sigmoid;

/// Probabilities are clamped to this floor inside the loss log; the clamped
/// branch contributes zero gradient.
pub const PROB_CLAMP: f64 = 1e-12;

/// One encoded comparison: query features plus model indices and outcome.
#[derive(Debug, Clone)]
pub struct TrainingExample {
    pub features: Embedding,
    pub model_a: usize,
    pub model_b: usize,
    pub label: OutcomeLabel,
}

/// Mini-batch gradient descent settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            learning_rate: 0.05,
            batch_size: 32,
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::config(format!(
                "learning rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch size must be positive"));
        }
        Ok(())
    }
}

/// Map raw comparison records onto encoded training examples. Every model id
/// must exist in the catalog; each distinct query text is encoded once.
pub fn prepare_training_set(
    records: &[ComparisonRecord],
    catalog: &ModelCatalog,
    encoder: &dyn Encoder,
) -> Result<Vec<TrainingExample>> {
    let mut cache: HashMap<String, Embedding> = HashMap::new();
    let mut examples = Vec::with_capacity(records.len());
    for r in records {
        let model_a = catalog
            .index_of(&r.model_a)
            .ok_or_else(|| Error::UnknownModel(r.model_a.clone()))?;
        let model_b = catalog
            .index_of(&r.model_b)
            .ok_or_else(|| Error::UnknownModel(r.model_b.clone()))?;
        let features = cache
            .entry(r.query_text.clone())
            .or_insert_with(|| encoder.encode(&r.query_text))
            .clone();
        examples.push(TrainingExample {
            features,
            model_a,
            model_b,
            label: r.label,
        });
    }
    Ok(examples)
}

pub(crate) struct GradBuffer {
    gate: Affine,
    experts: Vec<Affine>,
}

impl GradBuffer {
    fn zeros_like(params: &RouterParams) -> Self {
        GradBuffer {
            gate: Affine::zeros(params.gate().rows, params.gate().cols),
            experts: params
                .experts()
                .iter()
                .map(|e| Affine::zeros(e.rows, e.cols))
                .collect(),
        }
    }

    fn scale(&mut self, factor: f64) {
        for v in self.gate.w.iter_mut().chain(self.gate.b.iter_mut()) {
            *v *= factor;
        }
        for e in &mut self.experts {
            for v in e.w.iter_mut().chain(e.b.iter_mut()) {
                *v *= factor;
            }
        }
    }

    fn to_flat(&self) -> Vec<f64> {
        let mut flat = Vec::new();
        flat.extend_from_slice(&self.gate.w);
        flat.extend_from_slice(&self.gate.b);
        for e in &self.experts {
            flat.extend_from_slice(&e.w);
            flat.extend_from_slice(&e.b);
        }
        flat
    }
}

impl RouterParams {
    /// All trainable coordinates, flattened gate-first then experts, weights
    /// before biases. Gradient vectors use the same layout.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.param_count());
        flat.extend_from_slice(&self.gate().w);
        flat.extend_from_slice(&self.gate().b);
        for e in self.experts() {
            flat.extend_from_slice(&e.w);
            flat.extend_from_slice(&e.b);
        }
        flat
    }

    /// Add `delta` to the flattened coordinate `idx`.
    pub fn nudge(&mut self, idx: usize, delta: f64) {
        let mut offset = 0;
        {
            let gate = self.gate_mut();
            if idx < offset + gate.w.len() {
                gate.w[idx - offset] += delta;
                return;
            }
            offset += gate.w.len();
            if idx < offset + gate.b.len() {
                gate.b[idx - offset] += delta;
                return;
            }
            offset += gate.b.len();
        }
        for e in self.experts_mut() {
            if idx < offset + e.w.len() {
                e.w[idx - offset] += delta;
                return;
            }
            offset += e.w.len();
            if idx < offset + e.b.len() {
                e.b[idx - offset] += delta;
                return;
            }
            offset += e.b.len();
        }
        panic!("flat index {idx} out of range");
    }
}

struct RecordGrads {
    g_beta_a: f64,
    g_t: f64,
}

/// Per-case gradients of -ln p[label] with respect to beta_a and t = ln(theta).
/// The gradient with respect to beta_b is always the negation of g_beta_a.
fn outcome_grads(
    beta_a: f64,
    beta_b: f64,
    theta: f64,
    kappa: f64,
    margin: f64,
    label: OutcomeLabel,
) -> RecordGrads {
    let t = theta.ln();
    // A is the argument of p_win (equal to delta), B of p_lose,
    // C of s_win, D of s_lose.
    let a = beta_a - beta_b - t;
    let b = beta_b - beta_a - t;
    let c = kappa * (a - margin);
    let d = kappa * (-a - margin);
    match label {
        OutcomeLabel::Tie => {
            let p_win = sigmoid(a);
            let p_lose = sigmoid(b);
            RecordGrads {
                g_beta_a: p_win - p_lose,
                g_t: sigmoid(-a) + sigmoid(-b) - 2.0 * theta * theta / (theta * theta - 1.0),
            }
        }
        OutcomeLabel::WinA => {
            let g_a = -sigmoid(-a);
            let g_c = sigmoid(c);
            RecordGrads {
                g_beta_a: g_a + kappa * g_c,
                g_t: -g_a - kappa * g_c,
            }
        }
        OutcomeLabel::StrongWinA => {
            let g_a = -sigmoid(-a);
            let g_c = -sigmoid(-c);
            RecordGrads {
                g_beta_a: g_a + kappa * g_c,
                g_t: -g_a - kappa * g_c,
            }
        }
        OutcomeLabel::WinB => {
            let g_b = -sigmoid(-b);
            let g_d = sigmoid(d);
            RecordGrads {
                g_beta_a: -g_b - kappa * g_d,
                g_t: -g_b + kappa * g_d,
            }
        }
        OutcomeLabel::StrongWinB => {
            let g_b = -sigmoid(-b);
            let g_d = -sigmoid(-d);
            RecordGrads {
                g_beta_a: -g_b - kappa * g_d,
                g_t: -g_b + kappa * g_d,
            }
        }
    }
}

fn check_indices(params: &RouterParams, batch: &[TrainingExample]) -> Result<()> {
    for ex in batch {
        if ex.model_a >= params.num_models() || ex.model_b >= params.num_models() {
            return Err(Error::Index(format!(
                "model index ({}, {}) outside 0..{}",
                ex.model_a,
                ex.model_b,
                params.num_models()
            )));
        }
    }
    Ok(())
}

fn record_loss_and_backward(
    params: &RouterParams,
    ex: &TrainingExample,
    grads: Option<&mut GradBuffer>,
) -> Result<f64> {
    let trace: ForwardTrace = forward_trace(params, &ex.features)?;
    let m = params.num_models();
    let beta_a = trace.combined[ex.model_a];
    let beta_b = trace.combined[ex.model_b];
    let dist = outcome_distribution(beta_a, beta_b, trace.theta, params.kappa(), params.margin())?;
    let p = dist.prob(ex.label);
    if p <= PROB_CLAMP {
        // clamped branch: constant loss, zero gradient
        return Ok(-PROB_CLAMP.ln());
    }
    let loss = -p.ln();
    let Some(grads) = grads else {
        return Ok(loss);
    };

    let rec = outcome_grads(
        beta_a,
        beta_b,
        trace.theta,
        params.kappa(),
        params.margin(),
        ex.label,
    );
    let g_raw = rec.g_t / trace.theta * theta_grad(&trace, params);

    let mut g_out = vec![0.0; m + 1];
    g_out[ex.model_a] += rec.g_beta_a;
    g_out[ex.model_b] -= rec.g_beta_a;
    g_out[m] += g_raw;

    let x = ex.features.values();

    // expert affines and blend weights
    let mut g_blend = vec![0.0; trace.selected.len()];
    for (slot, &e) in trace.selected.iter().enumerate() {
        let w_hat = trace.blend[slot];
        let u = &trace.expert_out[slot];
        let ge = &mut grads.experts[e];
        let cols = ge.cols;
        for ((&go, row), gb) in g_out
            .iter()
            .zip(ge.w.chunks_exact_mut(cols))
            .zip(ge.b.iter_mut())
        {
            if go == 0.0 {
                continue;
            }
            let scaled = w_hat * go;
            for (wi, xi) in row.iter_mut().zip(x) {
                *wi += scaled * xi;
            }
            *gb += scaled;
        }
        g_blend[slot] = g_out.iter().zip(u).map(|(g, ui)| g * ui).sum();
    }

    // renormalization: w_hat = w_e / sum(selected)
    let picked: f64 = trace.selected.iter().map(|&e| trace.gate_weights[e]).sum();
    let blend_dot: f64 = g_blend.iter().zip(&trace.blend).map(|(g, w)| g * w).sum();
    let mut g_w = vec![0.0; trace.gate_weights.len()];
    for (slot, &e) in trace.selected.iter().enumerate() {
        g_w[e] = (g_blend[slot] - blend_dot) / picked;
    }

    // softmax: gz_i = w_i (gw_i - sum_j gw_j w_j)
    let dot: f64 = g_w
        .iter()
        .zip(&trace.gate_weights)
        .map(|(g, w)| g * w)
        .sum();
    for (i, (&gw, &w)) in g_w.iter().zip(&trace.gate_weights).enumerate() {
        let gz = w * (gw - dot);
        if gz == 0.0 {
            continue;
        }
        let row = &mut grads.gate.w[i * grads.gate.cols..(i + 1) * grads.gate.cols];
        for (wi, xi) in row.iter_mut().zip(x) {
            *wi += gz * xi;
        }
        grads.gate.b[i] += gz;
    }
    Ok(loss)
}

pub(crate) fn loss_and_grad(
    params: &RouterParams,
    batch: &[TrainingExample],
) -> Result<(f64, GradBuffer)> {
    if batch.is_empty() {
        return Err(Error::EmptyInput("training batch".into()));
    }
    check_indices(params, batch)?;
    let mut grads = GradBuffer::zeros_like(params);
    let mut total = 0.0;
    for ex in batch {
        total += record_loss_and_backward(params, ex, Some(&mut grads))?;
    }
    let n = batch.len() as f64;
    grads.scale(1.0 / n);
    Ok((total / n, grads))
}

/// Mean categorical cross-entropy of the five-class outcome model over a batch.
pub fn loss_grk(params: &RouterParams, batch: &[TrainingExample]) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::EmptyInput("training batch".into()));
    }
    check_indices(params, batch)?;
    let mut total = 0.0;
    for ex in batch {
        total += record_loss_and_backward(params, ex, None)?;
    }
    Ok(total / batch.len() as f64)
}

/// Flattened analytic gradient of [`loss_grk`], laid out like
/// [`RouterParams::flat_params`].
pub fn loss_gradient(params: &RouterParams, batch: &[TrainingExample]) -> Result<Vec<f64>> {
    let (_, grads) = loss_and_grad(params, batch)?;
    Ok(grads.to_flat())
}

/// Seeded mini-batch gradient descent. Zero epochs returns the parameters
/// unchanged; the shuffle order is fixed by the seed, so results are
/// bit-identical across runs.
pub fn train(
    params: &RouterParams,
    examples: &[TrainingExample],
    config: &TrainConfig,
) -> Result<RouterParams> {
    config.validate()?;
    if examples.is_empty() {
        return Err(Error::EmptyInput("training set".into()));
    }
    check_indices(params, examples)?;
    let mut current = params.clone();
    if config.epochs == 0 {
        return Ok(current);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<TrainingExample> =
                chunk.iter().map(|&i| examples[i].clone()).collect();
            let (_, grads) = loss_and_grad(&current, &batch)?;
            apply_sgd(&mut current, &grads, config.learning_rate);
        }
    }
    let finite = current.gate().is_finite() && current.experts().iter().all(Affine::is_finite);
    if !finite {
        return Err(Error::NonFinite(
            "training diverged to non-finite weights; lower the learning rate".into(),
        ));
    }
    Ok(current)
}

fn apply_sgd(params: &mut RouterParams, grads: &GradBuffer, lr: f64) {
    {
        let gate = params.gate_mut();
        for (w, g) in gate.w.iter_mut().zip(&grads.gate.w) {
            *w -= lr * g;
        }
        for (b, g) in gate.b.iter_mut().zip(&grads.gate.b) {
            *b -= lr * g;
        }
    }
    for (e, ge) in params.experts_mut().iter_mut().zip(&grads.experts) {
        for (w, g) in e.w.iter_mut().zip(&ge.w) {
            *w -= lr * g;
        }
        for (b, g) in e.b.iter_mut().zip(&ge.b) {
            *b -= lr * g;
        }
    }
}
