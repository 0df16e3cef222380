//! Seeded Lloyd k-means over embedding vectors.
//!
//! Farthest-point initialization, assignment ties toward the lower centroid
//! index, empty clusters repaired by stealing the point farthest from its
//! assigned centroid. The squared-distance objective is recorded after every
//! assignment step and is non-increasing across iterations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::encoder::Embedding;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct KmeansResult {
    /// Cluster index per input vector.
    pub assignments: Vec<usize>,
    pub centroids: Vec<Embedding>,
    /// Objective after each assignment step, oldest first.
    pub objective_trace: Vec<f64>,
}

impl KmeansResult {
    pub fn objective(&self) -> f64 {
        *self.objective_trace.last().unwrap_or(&0.0)
    }

    /// Member indices per cluster.
    pub fn clusters(&self, k: usize) -> Vec<Vec<usize>> {
        let mut clusters = vec![Vec::new(); k];
        for (i, &c) in self.assignments.iter().enumerate() {
            clusters[c].push(i);
        }
        clusters
    }
}

pub fn kmeans(
    vectors: &[Embedding],
    k: usize,
    max_iter: usize,
    seed: u64,
) -> Result<KmeansResult> {
    let n = vectors.len();
    if k < 1 || k > n {
        return Err(Error::config(format!("k={k} outside 1..={n}")));
    }
    let dim = vectors[0].dim();
    if vectors.iter().any(|v| v.dim() != dim) {
        return Err(Error::Dimension("k-means inputs have mixed dims".into()));
    }

    let mut centroids = init_farthest_point(vectors, k, seed)?;
    let mut assignments = vec![0usize; n];
    let mut trace = Vec::new();

    for _ in 0..max_iter.max(1) {
        let prev = assignments.clone();

        for (i, v) in vectors.iter().enumerate() {
            assignments[i] = nearest(v, &centroids)?;
        }
        repair_empty_clusters(vectors, &mut centroids, &mut assignments)?;

        let objective: f64 = vectors
            .iter()
            .zip(&assignments)
            .map(|(v, &c)| v.sq_dist(&centroids[c]).unwrap_or(f64::INFINITY))
            .sum();
        trace.push(objective);

        if assignments == prev && trace.len() > 1 {
            break;
        }
        update_centroids(vectors, &assignments, &mut centroids, dim);
    }

    Ok(KmeansResult {
        assignments,
        centroids,
        objective_trace: trace,
    })
}

fn init_farthest_point(vectors: &[Embedding], k: usize, seed: u64) -> Result<Vec<Embedding>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = rng.gen_range(0..vectors.len());
    let mut chosen = vec![first];
    while chosen.len() < k {
        let mut best = (0usize, f64::NEG_INFINITY);
        for (i, v) in vectors.iter().enumerate() {
            let mut nearest = f64::INFINITY;
            for &c in &chosen {
                nearest = nearest.min(v.sq_dist(&vectors[c])?);
            }
            if nearest > best.1 {
                best = (i, nearest);
            }
        }
        chosen.push(best.0);
    }
    Ok(chosen.into_iter().map(|i| vectors[i].clone()).collect())
}

fn nearest(v: &Embedding, centroids: &[Embedding]) -> Result<usize> {
    let mut best = (0usize, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = v.sq_dist(centroid)?;
        if d < best.1 {
            best = (c, d);
        }
    }
    Ok(best.0)
}

/// Give each empty cluster the point farthest from its assigned centroid;
/// points that are sole members of their cluster are not stolen.
fn repair_empty_clusters(
    vectors: &[Embedding],
    centroids: &mut [Embedding],
    assignments: &mut [usize],
) -> Result<()> {
    let k = centroids.len();
    loop {
        let mut sizes = vec![0usize; k];
        for &a in assignments.iter() {
            sizes[a] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return Ok(());
        };
        let mut steal = (usize::MAX, f64::NEG_INFINITY);
        for (i, v) in vectors.iter().enumerate() {
            if sizes[assignments[i]] <= 1 {
                continue;
            }
            let d = v.sq_dist(&centroids[assignments[i]])?;
            if d > steal.1 {
                steal = (i, d);
            }
        }
        let (point, _) = steal;
        centroids[empty] = vectors[point].clone();
        assignments[point] = empty;
    }
}

fn update_centroids(
    vectors: &[Embedding],
    assignments: &[usize],
    centroids: &mut [Embedding],
    dim: usize,
) {
    let k = centroids.len();
    let mut sums = vec![vec![0.0f64; dim]; k];
    let mut counts = vec![0usize; k];
    for (v, &c) in vectors.iter().zip(assignments) {
        counts[c] += 1;
        for (s, x) in sums[c].iter_mut().zip(v.values()) {
            *s += x;
        }
    }
    for (c, sum) in sums.into_iter().enumerate() {
        if counts[c] > 0 {
            let inv = 1.0 / counts[c] as f64;
            centroids[c] = Embedding::new(sum.into_iter().map(|s| s * inv).collect())
                .expect("finite centroid");
        }
    }
}
