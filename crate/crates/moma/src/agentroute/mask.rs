//! Token-logit masking over the agent-name vocabulary.
//!
//! Unavailable agents get -inf added to their logit, so after softmax their
//! probability is exactly zero and the decoder can only emit valid agents.
//! Each agent name is one token in this vocabulary.

use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// Additive mask: 0 for allowed positions, -inf for blocked ones.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskVector {
    values: Vec<f64>,
}

impl MaskVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_allowed(&self, idx: usize) -> bool {
        self.values.get(idx).is_some_and(|&v| v == 0.0)
    }

    pub fn allowed_count(&self) -> usize {
        self.values.iter().filter(|&&v| v == 0.0).count()
    }
}

/// Build the availability mask for an ordered vocabulary of agent-name tokens.
pub fn build_mask(vocabulary: &[String], available: &BTreeSet<String>) -> Result<MaskVector> {
    if available.is_empty() {
        return Err(Error::EmptyAvailable);
    }
    for name in available {
        if !vocabulary.iter().any(|v| v == name) {
            return Err(Error::config(format!(
                "available agent '{name}' is not in the vocabulary"
            )));
        }
    }
    let values = vocabulary
        .iter()
        .map(|tok| {
            if available.contains(tok) {
                0.0
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    Ok(MaskVector { values })
}

/// Softmax over `logits + mask`; masked probabilities are exactly zero.
///
/// Returns the argmax index (ties toward the lower index) and the full
/// probability vector. The chosen index is always an allowed token.
pub fn masked_decode(logits: &[f64], mask: &MaskVector) -> Result<(usize, Vec<f64>)> {
    if logits.len() != mask.len() {
        return Err(Error::Dimension(format!(
            "logits len {} != mask len {}",
            logits.len(),
            mask.len()
        )));
    }
    if logits.iter().any(|l| !l.is_finite()) {
        return Err(Error::NonFinite("decode logits".into()));
    }
    let mut max = f64::NEG_INFINITY;
    for (i, &l) in logits.iter().enumerate() {
        if mask.is_allowed(i) && l > max {
            max = l;
        }
    }
    debug_assert!(max.is_finite(), "mask invariant: at least one allowed token");

    let mut probs = vec![0.0; logits.len()];
    let mut sum = 0.0;
    for (i, &l) in logits.iter().enumerate() {
        if mask.is_allowed(i) {
            let e = (l - max).exp();
            probs[i] = e;
            sum += e;
        }
    }
    let mut chosen = 0;
    let mut best = -1.0;
    for (i, p) in probs.iter_mut().enumerate() {
        *p /= sum;
        if *p > best {
            best = *p;
            chosen = i;
        }
    }
    Ok((chosen, probs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn vocab(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn avail(names: &[&str]) -> BTreeSet<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn all_available_is_a_zero_mask() {
        let v = vocab(&["a", "b", "c"]);
        let mask = build_mask(&v, &avail(&["a", "b", "c"])).unwrap();
        assert_eq!(mask.values(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn one_of_three_available() {
        let v = vocab(&["a", "b", "c"]);
        let mask = build_mask(&v, &avail(&["b"])).unwrap();
        assert_eq!(mask.allowed_count(), 1);
        assert!(mask.is_allowed(1));
    }

    #[test]
    fn empty_available_rejected() {
        let v = vocab(&["a"]);
        assert!(matches!(
            build_mask(&v, &BTreeSet::new()),
            Err(Error::EmptyAvailable)
        ));
    }

    #[test]
    fn unknown_available_name_rejected() {
        let v = vocab(&["a", "b"]);
        assert!(matches!(
            build_mask(&v, &avail(&["zz"])),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn masked_softmax_spot_values() {
        let v = vocab(&["a", "b", "c"]);
        let mask = build_mask(&v, &avail(&["b", "c"])).unwrap();
        let (chosen, probs) = masked_decode(&[2.0, 1.0, 0.5], &mask).unwrap();
        assert_eq!(chosen, 1, "agent 0 is masked, agent 1 has the top logit");
        assert_eq!(probs[0], 0.0);
        // softmax over {1.0, 0.5}
        let e1 = 0.5f64.exp();
        let expect_b = 1.0 / (1.0 + (-0.5f64).exp());
        assert!((probs[1] - expect_b).abs() < 1e-12, "probs {probs:?} e1 {e1}");
        assert!((probs[1] + probs[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_unmasked_token_gets_probability_one() {
        let v = vocab(&["a", "b"]);
        let mask = build_mask(&v, &avail(&["b"])).unwrap();
        let (chosen, probs) = masked_decode(&[100.0, -3.0], &mask).unwrap();
        assert_eq!(chosen, 1);
        assert_eq!(probs, vec![0.0, 1.0]);
    }

    #[test]
    fn zero_mask_is_plain_softmax_argmax() {
        let v = vocab(&["a", "b", "c"]);
        let mask = build_mask(&v, &avail(&["a", "b", "c"])).unwrap();
        let (chosen, probs) = masked_decode(&[0.1, 3.0, -1.0], &mask).unwrap();
        assert_eq!(chosen, 1);
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_masks_never_choose_masked_tokens() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..1000 {
            let n = rng.gen_range(1..12);
            let names: Vec<String> = (0..n).map(|i| format!("agent{i}")).collect();
            let k = rng.gen_range(1..=n);
            let mut picked: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                picked.swap(i, rng.gen_range(0..=i));
            }
            let available: BTreeSet<String> =
                picked[..k].iter().map(|&i| names[i].clone()).collect();
            let mask = build_mask(&names, &available).unwrap();
            let logits: Vec<f64> = (0..n).map(|_| rng.gen_range(-30.0..30.0)).collect();
            let (chosen, probs) = masked_decode(&logits, &mask).unwrap();
            assert!(available.contains(&names[chosen]));
            let allowed_sum: f64 = probs
                .iter()
                .enumerate()
                .filter(|(i, _)| mask.is_allowed(*i))
                .map(|(_, p)| p)
                .sum();
            assert!((allowed_sum - 1.0).abs() < 1e-9);
            for (i, &p) in probs.iter().enumerate() {
                if !mask.is_allowed(i) {
                    assert_eq!(p, 0.0, "masked token got probability {p}");
                }
            }
        }
    }

    #[test]
    fn non_finite_logits_rejected() {
        let v = vocab(&["a", "b"]);
        let mask = build_mask(&v, &avail(&["a"])).unwrap();
        assert!(masked_decode(&[f64::INFINITY, 0.0], &mask).is_err());
        assert!(masked_decode(&[0.0], &mask).is_err(), "length mismatch");
    }
}
