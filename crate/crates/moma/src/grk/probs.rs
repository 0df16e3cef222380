//! Five-class outcome probabilities for a pairwise comparison.
//!
//! Given the two score logits and the per-query tie threshold theta > 1, the
//! base win/lose/tie masses are split into strong and weak variants by a
//! logistic gate on the winner's logarithmic advantage
//! `delta = beta_a - ln(theta) - beta_b`.

use crate::catalog::OutcomeLabel;
use crate::error::{Error, Result};
use crate::numerics::{log_sum_exp, sigmoid};

/// Probability simplex over {tie, a>b, a<b, a>>b, a<<b}, indexed by label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcomeDistribution {
    p: [f64; 5],
}

impl OutcomeDistribution {
    pub fn probs(&self) -> &[f64; 5] {
        &self.p
    }

    pub fn prob(&self, label: OutcomeLabel) -> f64 {
        self.p[label.index()]
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 1.0) || !theta.is_finite() {
        return Err(Error::Domain(format!("theta must be > 1, got {theta}")));
    }
    Ok(())
}

/// Base win/lose/tie probabilities of the generalized pairwise model.
///
/// `p_win = e^ba / (e^ba + theta e^bb)`, `p_lose` symmetric, and the tie mass
/// is computed multiplicatively in log space
/// (`(theta^2 - 1) e^(ba+bb) / ((e^ba + theta e^bb)(e^bb + theta e^ba))`)
/// so it stays positive even when `p_win` rounds to 1 at extreme score gaps.
pub fn base_probs(beta_a: f64, beta_b: f64, theta: f64) -> Result<(f64, f64, f64)> {
    check_theta(theta)?;
    let t = theta.ln();
    let p_win = sigmoid(beta_a - beta_b - t);
    let p_lose = sigmoid(beta_b - beta_a - t);
    // grouped so the expression is bit-symmetric under an a/b swap
    let log_tie = (theta * theta - 1.0).ln() + (beta_a + beta_b)
        - (log_sum_exp(beta_a, beta_b + t) + log_sum_exp(beta_b, beta_a + t));
    Ok((p_win, p_lose, log_tie.exp()))
}

/// Split a win into strong/weak: `s_win = sigmoid(kappa (delta - margin))`,
/// `s_lose = sigmoid(kappa (-delta - margin))`. Requires `kappa > 0`.
pub fn strong_split(delta: f64, kappa: f64, margin: f64) -> (f64, f64) {
    debug_assert!(kappa > 0.0, "kappa must be > 0");
    (
        sigmoid(kappa * (delta - margin)),
        sigmoid(kappa * (-delta - margin)),
    )
}

/// Full five-class distribution chaining the base probabilities and the
/// strong/weak split.
pub fn outcome_distribution(
    beta_a: f64,
    beta_b: f64,
    theta: f64,
    kappa: f64,
    margin: f64,
) -> Result<OutcomeDistribution> {
    check_theta(theta)?;
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(Error::Domain(format!("kappa must be > 0, got {kappa}")));
    }
    let (p_win, p_lose, p_tie) = base_probs(beta_a, beta_b, theta)?;
    let delta = beta_a - theta.ln() - beta_b;
    let (s_win, s_lose) = strong_split(delta, kappa, margin);
    // weak complements computed as sigmoids of the negated argument, not 1 - s
    let w_win = sigmoid(-kappa * (delta - margin));
    let w_lose = sigmoid(-kappa * (-delta - margin));
    let p = [
        p_tie,
        p_win * w_win,
        p_lose * w_lose,
        p_win * s_win,
        p_lose * s_lose,
    ];
    debug_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    Ok(OutcomeDistribution { p })
}
