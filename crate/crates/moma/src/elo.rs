//! Elo ratings over comparison logs.
//!
//! Sequential standard Elo in record order; strong and weak outcomes score
//! identically (1 / 0 / 0.5). Updates are applied as a single antisymmetric
//! delta, so the total rating is conserved exactly.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::catalog::{ComparisonRecord, OutcomeLabel};
use crate::error::{Error, Result};

pub const DEFAULT_K_FACTOR: f64 = 32.0;
pub const DEFAULT_INITIAL_RATING: f64 = 1000.0;

/// Ratings per model id after folding a comparison log.
#[derive(Debug, Clone, Serialize)]
pub struct EloTable {
    ratings: BTreeMap<String, f64>,
    k_factor: f64,
    initial_rating: f64,
}

impl EloTable {
    pub fn rating(&self, model: &str) -> Option<f64> {
        self.ratings.get(model).copied()
    }

    pub fn ratings(&self) -> &BTreeMap<String, f64> {
        &self.ratings
    }

    pub fn len(&self) -> usize {
        self.ratings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ratings.is_empty()
    }

    /// Rows of (model id, rating) sorted by descending rating, ties by id.
    pub fn leaderboard(&self) -> Vec<(String, f64)> {
        let mut rows: Vec<(String, f64)> = self
            .ratings
            .iter()
            .map(|(id, &r)| (id.clone(), r))
            .collect();
        rows.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.0.cmp(&b.0))
        });
        rows
    }
}

/// Expected score of the first player: `1 / (1 + 10^((rb - ra)/400))`.
pub fn expected_score(rating_a: f64, rating_b: f64) -> f64 {
    1.0 / (1.0 + 10f64.powf((rating_b - rating_a) / 400.0))
}

fn actual_score(label: OutcomeLabel) -> f64 {
    match label {
        OutcomeLabel::Tie => 0.5,
        OutcomeLabel::WinA | OutcomeLabel::StrongWinA => 1.0,
        OutcomeLabel::WinB | OutcomeLabel::StrongWinB => 0.0,
    }
}

/// Fold a comparison log into an Elo table. Record order matters: updates are
/// applied sequentially in log order.
pub fn compute_elo(
    records: &[ComparisonRecord],
    k_factor: f64,
    initial_rating: f64,
) -> Result<EloTable> {
    if !(k_factor > 0.0) || !k_factor.is_finite() {
        return Err(Error::config(format!("k factor must be > 0, got {k_factor}")));
    }
    let mut ratings: BTreeMap<String, f64> = BTreeMap::new();
    for r in records {
        r.validate()?;
        let ra = *ratings.entry(r.model_a.clone()).or_insert(initial_rating);
        let rb = *ratings.entry(r.model_b.clone()).or_insert(initial_rating);
        let expected = expected_score(ra, rb);
        let delta = k_factor * (actual_score(r.label) - expected);
        *ratings.get_mut(&r.model_a).unwrap() = ra + delta;
        *ratings.get_mut(&r.model_b).unwrap() = rb - delta;
    }
    Ok(EloTable {
        ratings,
        k_factor,
        initial_rating,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn record(a: &str, b: &str, label: OutcomeLabel) -> ComparisonRecord {
        ComparisonRecord {
            query_text: "q".into(),
            model_a: a.into(),
            model_b: b.into(),
            label,
        }
    }

    #[test]
    fn equal_ratings_win_moves_exactly_sixteen() {
        let table = compute_elo(&[record("a", "b", OutcomeLabel::WinA)], 32.0, 1000.0).unwrap();
        assert_eq!(table.rating("a"), Some(1016.0));
        assert_eq!(table.rating("b"), Some(984.0));
    }

    #[test]
    fn tie_between_equals_changes_nothing() {
        let table = compute_elo(&[record("a", "b", OutcomeLabel::Tie)], 32.0, 1000.0).unwrap();
        assert_eq!(table.rating("a"), Some(1000.0));
        assert_eq!(table.rating("b"), Some(1000.0));
    }

    #[test]
    fn strong_and_weak_outcomes_score_identically() {
        let weak = compute_elo(&[record("a", "b", OutcomeLabel::WinA)], 32.0, 1000.0).unwrap();
        let strong =
            compute_elo(&[record("a", "b", OutcomeLabel::StrongWinA)], 32.0, 1000.0).unwrap();
        assert_eq!(weak.rating("a"), strong.rating("a"));
    }

    #[test]
    fn total_rating_is_conserved_on_random_logs() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let models = ["m0", "m1", "m2", "m3", "m4"];
        let mut records = Vec::new();
        for _ in 0..500 {
            let a = models[rng.gen_range(0..models.len())];
            let mut b = models[rng.gen_range(0..models.len())];
            while b == a {
                b = models[rng.gen_range(0..models.len())];
            }
            records.push(record(a, b, OutcomeLabel::from_index(rng.gen_range(0..5)).unwrap()));
        }
        let table = compute_elo(&records, 32.0, 1000.0).unwrap();
        let total: f64 = table.ratings().values().sum();
        assert!((total - table.len() as f64 * 1000.0).abs() < 1e-6, "total {total}");
    }

    #[test]
    fn undefeated_model_ends_above_initial() {
        let records = vec![
            record("champ", "m1", OutcomeLabel::WinA),
            record("m2", "champ", OutcomeLabel::WinB),
            record("champ", "m3", OutcomeLabel::StrongWinA),
        ];
        let table = compute_elo(&records, 32.0, 1000.0).unwrap();
        assert!(table.rating("champ").unwrap() > 1000.0);
    }

    #[test]
    fn record_order_matters_and_is_documented() {
        let forward = vec![
            record("a", "b", OutcomeLabel::WinA),
            record("b", "c", OutcomeLabel::WinA),
        ];
        let reversed: Vec<_> = forward.iter().rev().cloned().collect();
        let t1 = compute_elo(&forward, 32.0, 1000.0).unwrap();
        let t2 = compute_elo(&reversed, 32.0, 1000.0).unwrap();
        // b enters its second game at a different rating in each order
        assert_ne!(t1.rating("b"), t2.rating("b"));
    }

    #[test]
    fn leaderboard_sorted_descending() {
        let records = vec![
            record("a", "b", OutcomeLabel::WinA),
            record("c", "b", OutcomeLabel::WinB),
        ];
        let table = compute_elo(&records, 32.0, 1000.0).unwrap();
        let rows = table.leaderboard();
        for pair in rows.windows(2) {
            assert!(pair[0].1 >= pair[1].1);
        }
    }

    #[test]
    fn non_positive_k_rejected() {
        assert!(compute_elo(&[], 0.0, 1000.0).is_err());
        assert!(compute_elo(&[], -1.0, 1000.0).is_err());
    }
}
