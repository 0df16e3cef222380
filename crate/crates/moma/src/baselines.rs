//! Comparison routers sharing the same encoder: a supervised classifier over
//! best-model labels and a contrastive pairwise scorer. Both are single
//! affine heads, so harness comparisons are about the training objective
//! rather than model capacity.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::encoder::Embedding;
use crate::error::{Error, Result};
use crate::grk::{Affine, TrainConfig, PROB_CLAMP};
use crate::numerics::sigmoid;
use crate::persist::{ContainerReader, ContainerWriter};

pub const SFT_MAGIC: [u8; 4] = *b"MOMS";
pub const CONTRASTIVE_MAGIC: [u8; 4] = *b"MOMC";

/// One supervised example: query features and the planted best model.
#[derive(Debug, Clone)]
pub struct SftExample {
    pub features: Embedding,
    pub best_model: usize,
}

/// One pairwise example: `label` is true when model_i beat model_j.
#[derive(Debug, Clone)]
pub struct PreferencePair {
    pub features: Embedding,
    pub model_i: usize,
    pub model_j: usize,
    pub label: bool,
}

/// Affine head `d -> M` used by both baselines.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineHead {
    head: Affine,
}

pub type ClassifierParams = AffineHead;
pub type PairwiseParams = AffineHead;

impl AffineHead {
    pub fn init(dim: usize, num_models: usize, seed: u64) -> Result<Self> {
        if dim == 0 || num_models == 0 {
            return Err(Error::config("dim and model count must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(AffineHead {
            head: Affine::random(num_models, dim, &mut rng),
        })
    }

    pub fn dim(&self) -> usize {
        self.head.cols
    }

    pub fn num_models(&self) -> usize {
        self.head.rows
    }

    /// Raw per-model scores for encoded query features.
    pub fn scores(&self, features: &Embedding) -> Result<Vec<f64>> {
        if features.dim() != self.dim() {
            return Err(Error::Dimension(format!(
                "features dim {} != head dim {}",
                features.dim(),
                self.dim()
            )));
        }
        Ok(self.head.apply(features.values()))
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Predicted probability distribution over the candidate models.
pub fn sft_predict(params: &ClassifierParams, features: &Embedding) -> Result<Vec<f64>> {
    Ok(softmax(&params.scores(features)?))
}

/// Mean cross-entropy of the classifier on labeled examples.
pub fn sft_loss(params: &ClassifierParams, dataset: &[SftExample]) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::EmptyInput("sft dataset".into()));
    }
    let mut total = 0.0;
    for ex in dataset {
        check_label(params, ex.best_model)?;
        let probs = sft_predict(params, &ex.features)?;
        total += -probs[ex.best_model].max(PROB_CLAMP).ln();
    }
    Ok(total / dataset.len() as f64)
}

fn check_label(params: &AffineHead, label: usize) -> Result<()> {
    if label >= params.num_models() {
        return Err(Error::Index(format!(
            "model index {label} outside 0..{}",
            params.num_models()
        )));
    }
    Ok(())
}

/// Train the classifier with seeded mini-batch gradient descent on the
/// standard cross-entropy. Zero epochs returns the parameters unchanged.
pub fn sft_train(
    params: &ClassifierParams,
    dataset: &[SftExample],
    config: &TrainConfig,
) -> Result<ClassifierParams> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::EmptyInput("sft dataset".into()));
    }
    for ex in dataset {
        check_label(params, ex.best_model)?;
    }
    let mut current = params.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size) {
            let mut grad = Affine::zeros(current.head.rows, current.head.cols);
            for &i in chunk {
                let ex = &dataset[i];
                let probs = softmax(&current.head.apply(ex.features.values()));
                let x = ex.features.values();
                for (m, &p) in probs.iter().enumerate() {
                    let g = p - if m == ex.best_model { 1.0 } else { 0.0 };
                    let row = &mut grad.w[m * grad.cols..(m + 1) * grad.cols];
                    for (wi, xi) in row.iter_mut().zip(x) {
                        *wi += g * xi;
                    }
                    grad.b[m] += g;
                }
            }
            let lr = config.learning_rate / chunk.len() as f64;
            for (w, g) in current.head.w.iter_mut().zip(&grad.w) {
                *w -= lr * g;
            }
            for (b, g) in current.head.b.iter_mut().zip(&grad.b) {
                *b -= lr * g;
            }
        }
    }
    Ok(current)
}

/// P(model_i beats model_j | query) = sigmoid(score_i - score_j).
///
/// Computed so that `preference_prob(i, j) + preference_prob(j, i)` is
/// exactly 1: the negative branch is the exact complement.
pub fn preference_prob(
    params: &PairwiseParams,
    features: &Embedding,
    model_i: usize,
    model_j: usize,
) -> Result<f64> {
    check_label(params, model_i)?;
    check_label(params, model_j)?;
    let scores = params.scores(features)?;
    let d = scores[model_i] - scores[model_j];
    Ok(if d >= 0.0 {
        sigmoid(d)
    } else {
        1.0 - sigmoid(-d)
    })
}

/// Mean binary cross-entropy over pairwise preference labels.
pub fn contrastive_loss(params: &PairwiseParams, dataset: &[PreferencePair]) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::EmptyInput("contrastive dataset".into()));
    }
    let mut total = 0.0;
    for pair in dataset {
        if pair.model_i == pair.model_j {
            return Err(Error::data_format("pair with model_i == model_j"));
        }
        let p = preference_prob(params, &pair.features, pair.model_i, pair.model_j)?;
        let target = if pair.label { p } else { 1.0 - p };
        total += -target.max(PROB_CLAMP).ln();
    }
    Ok(total / dataset.len() as f64)
}

/// Train the pairwise scorer on sigmoid-difference preferences.
pub fn contrastive_train(
    params: &PairwiseParams,
    dataset: &[PreferencePair],
    config: &TrainConfig,
) -> Result<PairwiseParams> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::EmptyInput("contrastive dataset".into()));
    }
    for pair in dataset {
        check_label(params, pair.model_i)?;
        check_label(params, pair.model_j)?;
        if pair.model_i == pair.model_j {
            return Err(Error::data_format("pair with model_i == model_j"));
        }
    }
    let mut current = params.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size) {
            let mut grad = Affine::zeros(current.head.rows, current.head.cols);
            for &i in chunk {
                let pair = &dataset[i];
                let p = preference_prob(&current, &pair.features, pair.model_i, pair.model_j)?;
                let g = p - if pair.label { 1.0 } else { 0.0 };
                let x = pair.features.values();
                let row_i =
                    &mut grad.w[pair.model_i * grad.cols..(pair.model_i + 1) * grad.cols];
                for (wi, xi) in row_i.iter_mut().zip(x) {
                    *wi += g * xi;
                }
                grad.b[pair.model_i] += g;
                let row_j =
                    &mut grad.w[pair.model_j * grad.cols..(pair.model_j + 1) * grad.cols];
                for (wi, xi) in row_j.iter_mut().zip(x) {
                    *wi -= g * xi;
                }
                grad.b[pair.model_j] -= g;
            }
            let lr = config.learning_rate / chunk.len() as f64;
            for (w, g) in current.head.w.iter_mut().zip(&grad.w) {
                *w -= lr * g;
            }
            for (b, g) in current.head.b.iter_mut().zip(&grad.b) {
                *b -= lr * g;
            }
        }
    }
    Ok(current)
}

/// Ranking by pairwise win counts.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseRanking {
    pub chosen: usize,
    /// Model indices, best first.
    pub ranking: Vec<usize>,
    pub scores: Vec<f64>,
}

/// Count pairwise wins (score difference > 0) and rank all models; ties break
/// toward the higher raw score, then the lower index.
pub fn contrastive_rank(params: &PairwiseParams, features: &Embedding) -> Result<PairwiseRanking> {
    if params.num_models() < 2 {
        return Err(Error::config("pairwise ranking needs at least 2 models"));
    }
    let scores = params.scores(features)?;
    let m = scores.len();
    let wins: Vec<usize> = (0..m)
        .map(|i| (0..m).filter(|&j| j != i && scores[i] > scores[j]).count())
        .collect();
    let mut ranking: Vec<usize> = (0..m).collect();
    ranking.sort_by(|&a, &b| {
        wins[b]
            .cmp(&wins[a])
            .then_with(|| {
                scores[b]
                    .partial_cmp(&scores[a])
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .then_with(|| a.cmp(&b))
    });
    Ok(PairwiseRanking {
        chosen: ranking[0],
        ranking,
        scores,
    })
}

/// Persist either baseline head under its magic tag.
fn save_head(head: &AffineHead, magic: [u8; 4], path: &Path) -> Result<()> {
    let mut w = ContainerWriter::new(magic);
    w.push_u32(head.head.cols as u32);
    w.push_u32(head.head.rows as u32);
    w.push_f64_slice(&head.head.w);
    w.push_f64_slice(&head.head.b);
    crate::error::write_file(path, w.finish())?;
    Ok(())
}

fn load_head(magic: [u8; 4], path: &Path) -> Result<AffineHead> {
    let data = crate::error::read_file_bytes(path)?;
    let mut r = ContainerReader::open(&data, magic)?;
    let dim = r.read_u32()? as usize;
    let rows = r.read_u32()? as usize;
    let w = r.read_f64_vec(rows * dim)?;
    let b = r.read_f64_vec(rows)?;
    r.finish()?;
    if dim == 0 || rows == 0 || w.iter().chain(&b).any(|v| !v.is_finite()) {
        return Err(Error::data_format("baseline head malformed"));
    }
    Ok(AffineHead {
        head: Affine {
            rows,
            cols: dim,
            w,
            b,
        },
    })
}

pub fn save_sft_params(params: &ClassifierParams, path: impl AsRef<Path>) -> Result<()> {
    save_head(params, SFT_MAGIC, path.as_ref())
}

pub fn load_sft_params(path: impl AsRef<Path>) -> Result<ClassifierParams> {
    load_head(SFT_MAGIC, path.as_ref())
}

pub fn save_contrastive_params(params: &PairwiseParams, path: impl AsRef<Path>) -> Result<()> {
    save_head(params, CONTRASTIVE_MAGIC, path.as_ref())
}

pub fn load_contrastive_params(path: impl AsRef<Path>) -> Result<PairwiseParams> {
    load_head(CONTRASTIVE_MAGIC, path.as_ref())
}
