//! Pareto frontier extraction over (cost, score) and TOPSIS selection.
//!
//! The frontier keeps every point not dominated by a cheaper-and-better one
//! (exact duplicates are all retained). TOPSIS normalizes both axes onto
//! [0, 1], measures weighted distances to the ideal point (cheapest, best)
//! and anti-ideal point, and picks the candidate with maximal relative
//! closeness. Ties break toward higher raw score, then lower raw cost, then
//! lexicographic model id, so selection is a total order.

use serde::Serialize;

use crate::catalog::{Currency, PreferenceMode};
use crate::error::{Error, Result};

/// One candidate on the cost/score plane.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParetoPoint {
    pub model_id: String,
    pub cost: Currency,
    pub score: f64,
}

impl ParetoPoint {
    pub fn new(model_id: impl Into<String>, cost: Currency, score: f64) -> Self {
        ParetoPoint {
            model_id: model_id.into(),
            cost,
            score,
        }
    }
}

/// Importance weights for the cost and score axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Weights {
    pub cost: f64,
    pub score: f64,
}

impl Weights {
    pub fn new(cost: f64, score: f64) -> Result<Self> {
        if !(cost >= 0.0) || !(score >= 0.0) || !(cost + score > 0.0) {
            return Err(Error::config(format!(
                "weights must be non-negative with a positive sum, got ({cost}, {score})"
            )));
        }
        Ok(Weights { cost, score })
    }
}

/// Weight presets for the preference modes; both are config-overridable.
pub const AUTO_WEIGHTS: (f64, f64) = (0.5, 0.5);
pub const COST_PRIORITY_WEIGHTS: (f64, f64) = (0.8, 0.2);

/// Outcome of a TOPSIS selection, with the full diagnostic table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionResult {
    pub chosen: String,
    pub closeness: f64,
    pub frontier: Vec<ParetoPoint>,
    /// Normalized (cost', score') coordinates aligned with `frontier`.
    pub normalized: Vec<(f64, f64)>,
    /// Relative closeness per frontier point, aligned with `frontier`.
    pub closenesses: Vec<f64>,
}

fn sort_frontier(points: &mut [ParetoPoint]) {
    points.sort_by(|a, b| {
        a.cost
            .cmp(&b.cost)
            .then_with(|| b.score.partial_cmp(&a.score).unwrap_or(std::cmp::Ordering::Equal))
            .then_with(|| a.model_id.cmp(&b.model_id))
    });
}

fn check_finite(points: &[ParetoPoint]) -> Result<()> {
    for p in points {
        if !p.score.is_finite() {
            return Err(Error::NonFinite(format!("score of '{}'", p.model_id)));
        }
    }
    Ok(())
}

/// Non-dominated subset, sorted by ascending cost.
///
/// Sort-and-sweep: after ordering by (cost asc, score desc), a cost group
/// survives iff its best score strictly beats everything cheaper, and within
/// a group only the top-score points (including duplicates) survive.
pub fn pareto_frontier(points: &[ParetoPoint]) -> Result<Vec<ParetoPoint>> {
    if points.is_empty() {
        return Err(Error::EmptyInput("pareto frontier".into()));
    }
    check_finite(points)?;
    let mut sorted = points.to_vec();
    sort_frontier(&mut sorted);

    let mut frontier = Vec::new();
    let mut best_score = f64::NEG_INFINITY;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j].cost == sorted[i].cost {
            j += 1;
        }
        let group_best = sorted[i].score;
        if group_best > best_score {
            frontier.extend(
                sorted[i..j]
                    .iter()
                    .filter(|p| p.score == group_best)
                    .cloned(),
            );
            best_score = group_best;
        }
        i = j;
    }
    Ok(frontier)
}

/// Min-max normalize both axes over the frontier population; a degenerate
/// dimension (max == min) maps every point to 0.5 on that axis.
pub fn normalize(frontier: &[ParetoPoint]) -> Result<Vec<(f64, f64)>> {
    if frontier.is_empty() {
        return Err(Error::EmptyInput("normalize".into()));
    }
    let costs: Vec<f64> = frontier.iter().map(|p| p.cost.to_f64()).collect();
    let scores: Vec<f64> = frontier.iter().map(|p| p.score).collect();
    let (cmin, cmax) = min_max(&costs);
    let (smin, smax) = min_max(&scores);
    Ok(frontier
        .iter()
        .enumerate()
        .map(|(i, _)| {
            let c = if cmax > cmin {
                (costs[i] - cmin) / (cmax - cmin)
            } else {
                0.5
            };
            let s = if smax > smin {
                (scores[i] - smin) / (smax - smin)
            } else {
                0.5
            };
            (c, s)
        })
        .collect())
}

fn min_max(values: &[f64]) -> (f64, f64) {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in values {
        min = min.min(v);
        max = max.max(v);
    }
    (min, max)
}

fn closeness_of(norm: (f64, f64), weights: Weights) -> f64 {
    let (c, s) = norm;
    let d_plus = ((weights.cost * c).powi(2) + (weights.score * (1.0 - s)).powi(2)).sqrt();
    let d_minus = ((weights.cost * (1.0 - c)).powi(2) + (weights.score * s).powi(2)).sqrt();
    if d_plus + d_minus == 0.0 {
        0.5
    } else {
        d_minus / (d_plus + d_minus)
    }
}

/// Pick the frontier point with maximal relative closeness to the ideal point.
pub fn topsis_select(frontier: &[ParetoPoint], weights: Weights) -> Result<SelectionResult> {
    if frontier.is_empty() {
        return Err(Error::EmptyInput("topsis".into()));
    }
    check_finite(frontier)?;
    let mut frontier = frontier.to_vec();
    sort_frontier(&mut frontier);
    let normalized = normalize(&frontier)?;
    let closenesses: Vec<f64> = normalized
        .iter()
        .map(|&n| closeness_of(n, weights))
        .collect();

    let mut best = 0;
    for i in 1..frontier.len() {
        if preferred(&frontier[i], closenesses[i], &frontier[best], closenesses[best]) {
            best = i;
        }
    }
    Ok(SelectionResult {
        chosen: frontier[best].model_id.clone(),
        closeness: closenesses[best],
        frontier,
        normalized,
        closenesses,
    })
}

/// Candidate ordering: closeness, then raw score, then lower cost, then id.
fn preferred(p: &ParetoPoint, cp: f64, q: &ParetoPoint, cq: f64) -> bool {
    if cp != cq {
        return cp > cq;
    }
    if p.score != q.score {
        return p.score > q.score;
    }
    if p.cost != q.cost {
        return p.cost < q.cost;
    }
    p.model_id < q.model_id
}

/// Preference-mode selection over raw candidate points.
///
/// - performance: argmax raw score over all points (ties: lower cost, then id)
/// - cost: restrict to the budget (or the cheapest cost quartile when no
///   budget is given), then TOPSIS with the cost-priority weights
/// - auto: TOPSIS over the frontier with balanced weights
pub fn select_with_preference(
    points: &[ParetoPoint],
    mode: &PreferenceMode,
) -> Result<SelectionResult> {
    select_with_preference_weights(
        points,
        mode,
        Weights::new(AUTO_WEIGHTS.0, AUTO_WEIGHTS.1)?,
        Weights::new(COST_PRIORITY_WEIGHTS.0, COST_PRIORITY_WEIGHTS.1)?,
    )
}

pub fn select_with_preference_weights(
    points: &[ParetoPoint],
    mode: &PreferenceMode,
    auto_weights: Weights,
    cost_weights: Weights,
) -> Result<SelectionResult> {
    if points.is_empty() {
        return Err(Error::EmptyInput("selection".into()));
    }
    match mode {
        PreferenceMode::PerformancePriority => {
            let frontier = pareto_frontier(points)?;
            // argmax raw score over all points lands on the frontier: among
            // the max-score points the cheapest is non-dominated
            topsis_select(&frontier, Weights::new(0.0, 1.0)?)
        }
        PreferenceMode::Auto => {
            let frontier = pareto_frontier(points)?;
            topsis_select(&frontier, auto_weights)
        }
        PreferenceMode::CostPriority { budget } => {
            let feasible: Vec<ParetoPoint> = match budget {
                Some(limit) => {
                    let kept: Vec<ParetoPoint> = points
                        .iter()
                        .filter(|p| p.cost <= *limit)
                        .cloned()
                        .collect();
                    if kept.is_empty() {
                        return Err(Error::BudgetInfeasible(limit.to_string()));
                    }
                    kept
                }
                None => cheapest_quartile(points),
            };
            let frontier = pareto_frontier(&feasible)?;
            topsis_select(&frontier, cost_weights)
        }
    }
}

/// The ceil(n/4) cheapest points (at least one), ties resolved by the
/// frontier ordering so the cut is deterministic.
fn cheapest_quartile(points: &[ParetoPoint]) -> Vec<ParetoPoint> {
    let mut sorted = points.to_vec();
    sort_frontier(&mut sorted);
    let keep = points.len().div_ceil(4);
    sorted.truncate(keep.max(1));
    sorted
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn point(id: &str, cost: &str, score: f64) -> ParetoPoint {
        ParetoPoint::new(id, Currency::parse(cost).unwrap(), score)
    }

    /// True when `q` dominates `p`: cheaper-or-equal and better-or-equal
    /// with at least one strict inequality.
    fn dominates(q: &ParetoPoint, p: &ParetoPoint) -> bool {
        q.cost <= p.cost && q.score >= p.score && (q.cost < p.cost || q.score > p.score)
    }

    /// O(n^2) dominance oracle used to cross-check the sweep implementation.
    fn brute_force_frontier(points: &[ParetoPoint]) -> Vec<ParetoPoint> {
        let mut kept: Vec<ParetoPoint> = points
            .iter()
            .filter(|p| !points.iter().any(|q| dominates(q, p)))
            .cloned()
            .collect();
        sort_frontier(&mut kept);
        kept
    }

    #[test]
    fn frontier_drops_dominated_point() {
        let pts = vec![
            point("cheap", "0.5", 0.5),
            point("mid", "1", 0.9),
            point("pricey", "2", 0.8),
        ];
        let frontier = pareto_frontier(&pts).unwrap();
        let ids: Vec<&str> = frontier.iter().map(|p| p.model_id.as_str()).collect();
        assert_eq!(ids, vec!["cheap", "mid"]);
    }

    #[test]
    fn single_point_is_its_own_frontier() {
        let pts = vec![point("only", "1", 0.3)];
        assert_eq!(pareto_frontier(&pts).unwrap(), pts);
    }

    #[test]
    fn exact_duplicates_are_all_retained() {
        let pts = vec![point("a", "1", 0.5), point("b", "1", 0.5), point("c", "1", 0.5)];
        let frontier = pareto_frontier(&pts).unwrap();
        assert_eq!(frontier.len(), 3);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(pareto_frontier(&[]), Err(Error::EmptyInput(_))));
        assert!(matches!(normalize(&[]), Err(Error::EmptyInput(_))));
        assert!(matches!(
            select_with_preference(&[], &PreferenceMode::Auto),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn non_finite_scores_are_rejected() {
        let pts = vec![point("ok", "1", 0.5), point("bad", "2", f64::NAN)];
        assert!(matches!(pareto_frontier(&pts), Err(Error::NonFinite(_))));
        assert!(matches!(
            topsis_select(&pts, Weights::new(0.5, 0.5).unwrap()),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn frontier_matches_brute_force_on_random_grids() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..300 {
            let n = rng.gen_range(1..=12);
            let pts: Vec<ParetoPoint> = (0..n)
                .map(|i| {
                    point(
                        &format!("m{i}"),
                        &format!("{}", rng.gen_range(0..5)),
                        rng.gen_range(0..5) as f64,
                    )
                })
                .collect();
            assert_eq!(pareto_frontier(&pts).unwrap(), brute_force_frontier(&pts));
        }
    }

    #[test]
    fn frontier_invariant_under_positive_affine_cost_rescale() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..100 {
            let n = rng.gen_range(1..=10);
            let pts: Vec<ParetoPoint> = (0..n)
                .map(|i| {
                    point(
                        &format!("m{i}"),
                        &format!("0.{:03}", rng.gen_range(0..999)),
                        rng.gen_range(0.0..1.0),
                    )
                })
                .collect();
            let scale = Currency::parse("3.25").unwrap();
            let shift = Currency::parse("0.125").unwrap();
            let rescaled: Vec<ParetoPoint> = pts
                .iter()
                .map(|p| ParetoPoint {
                    model_id: p.model_id.clone(),
                    cost: Currency::new(p.cost.inner() * scale.inner() + shift.inner()),
                    score: p.score,
                })
                .collect();
            let ids = |f: Vec<ParetoPoint>| -> Vec<String> {
                f.into_iter().map(|p| p.model_id).collect()
            };
            assert_eq!(
                ids(pareto_frontier(&pts).unwrap()),
                ids(pareto_frontier(&rescaled).unwrap())
            );
        }
    }

    #[test]
    fn normalize_spans_unit_square() {
        let pts = vec![point("a", "1", 0.2), point("b", "3", 0.8)];
        let norm = normalize(&pts).unwrap();
        assert_eq!(norm, vec![(0.0, 0.0), (1.0, 1.0)]);
    }

    #[test]
    fn normalize_degenerate_dimension_is_half() {
        let single = normalize(&[point("a", "1", 0.2)]).unwrap();
        assert_eq!(single, vec![(0.5, 0.5)]);
        let same_cost = normalize(&[point("a", "1", 0.2), point("b", "1", 0.9)]).unwrap();
        assert_eq!(same_cost[0].0, 0.5);
        assert_eq!(same_cost[1].0, 0.5);
    }

    #[test]
    fn ideal_and_anti_ideal_closeness() {
        // ideal (c'=0, s'=1) has closeness exactly 1; anti-ideal exactly 0
        let pts = vec![point("ideal", "1", 0.9), point("anti", "5", 0.1)];
        let result = topsis_select(&pts, Weights::new(0.5, 0.5).unwrap()).unwrap();
        assert_eq!(result.chosen, "ideal");
        assert_eq!(result.closeness, 1.0);
        let anti_idx = result
            .frontier
            .iter()
            .position(|p| p.model_id == "anti")
            .unwrap();
        assert_eq!(result.closenesses[anti_idx], 0.0);
    }

    #[test]
    fn midpoint_closeness_is_half() {
        let pts = vec![
            point("lo", "1", 0.0),
            point("mid", "2", 0.5),
            point("hi", "3", 1.0),
        ];
        let result = topsis_select(&pts, Weights::new(0.5, 0.5).unwrap()).unwrap();
        let mid_idx = result
            .frontier
            .iter()
            .position(|p| p.model_id == "mid")
            .unwrap();
        assert!((result.closenesses[mid_idx] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn topsis_matches_exhaustive_oracle_on_random_frontiers() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        for _ in 0..200 {
            let n = rng.gen_range(1..=8);
            let pts: Vec<ParetoPoint> = (0..n)
                .map(|i| {
                    point(
                        &format!("m{i}"),
                        &format!("0.{:04}", rng.gen_range(0..9999)),
                        rng.gen_range(0.0..1.0),
                    )
                })
                .collect();
            let frontier = pareto_frontier(&pts).unwrap();
            let w = Weights::new(rng.gen_range(0.0..1.0), rng.gen_range(0.01..1.0)).unwrap();
            let result = topsis_select(&frontier, w).unwrap();

            // oracle: recompute closeness per point, scan for the best
            let norm = normalize(&result.frontier).unwrap();
            let mut best: Option<(usize, f64)> = None;
            for (i, &nm) in norm.iter().enumerate() {
                let c = closeness_of(nm, w);
                let better = match best {
                    None => true,
                    Some((bi, bc)) => {
                        preferred(&result.frontier[i], c, &result.frontier[bi], bc)
                    }
                };
                if better {
                    best = Some((i, c));
                }
            }
            let (bi, bc) = best.unwrap();
            assert_eq!(result.chosen, result.frontier[bi].model_id);
            assert_eq!(result.closeness, bc);
            assert!(result
                .closenesses
                .iter()
                .all(|&c| (0.0..=1.0).contains(&c) && c <= result.closeness));
        }
    }

    #[test]
    fn tie_breaks_prefer_score_then_cost_then_id() {
        // duplicates at the same closeness: the higher-score point wins
        let pts = vec![point("low", "1", 0.4), point("high", "2", 0.4)];
        // same score; cheaper wins
        let result = topsis_select(&pareto_frontier(&pts).unwrap(), Weights::new(0.0, 1.0).unwrap()).unwrap();
        assert_eq!(result.chosen, "low");

        // identical (cost, score) duplicates: lexicographic id decides
        let dups = vec![point("zeta", "1", 0.4), point("alpha", "1", 0.4)];
        let result = topsis_select(&dups, Weights::new(0.5, 0.5).unwrap()).unwrap();
        assert_eq!(result.chosen, "alpha");
    }

    #[test]
    fn equal_weights_argmax_invariant_to_scale() {
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        for _ in 0..50 {
            let n = rng.gen_range(2..=8);
            let pts: Vec<ParetoPoint> = (0..n)
                .map(|i| {
                    point(
                        &format!("m{i}"),
                        &format!("0.{:04}", rng.gen_range(0..9999)),
                        rng.gen_range(0.0..1.0),
                    )
                })
                .collect();
            let frontier = pareto_frontier(&pts).unwrap();
            let baseline = topsis_select(&frontier, Weights::new(0.5, 0.5).unwrap())
                .unwrap()
                .chosen;
            for w in [0.1, 1.0, 7.5] {
                let chosen = topsis_select(&frontier, Weights::new(w, w).unwrap())
                    .unwrap()
                    .chosen;
                assert_eq!(chosen, baseline, "w={w}");
            }
        }
    }

    #[test]
    fn performance_priority_prefers_cheaper_on_score_tie() {
        let pts = vec![point("pricey", "1", 0.9), point("cheap", "0.1", 0.9)];
        let result =
            select_with_preference(&pts, &PreferenceMode::PerformancePriority).unwrap();
        assert_eq!(result.chosen, "cheap");
    }

    #[test]
    fn performance_priority_equals_raw_argmax_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(46);
        for _ in 0..100 {
            let n = rng.gen_range(1..=10);
            let pts: Vec<ParetoPoint> = (0..n)
                .map(|i| {
                    point(
                        &format!("m{i}"),
                        &format!("0.{:02}", rng.gen_range(0..99)),
                        rng.gen_range(0..6) as f64 / 5.0,
                    )
                })
                .collect();
            let result =
                select_with_preference(&pts, &PreferenceMode::PerformancePriority).unwrap();
            // literal argmax over all points with the documented tie chain
            let mut best = &pts[0];
            for p in &pts[1..] {
                let better = p.score > best.score
                    || (p.score == best.score && p.cost < best.cost)
                    || (p.score == best.score
                        && p.cost == best.cost
                        && p.model_id < best.model_id);
                if better {
                    best = p;
                }
            }
            assert_eq!(result.chosen, best.model_id);
        }
    }

    #[test]
    fn cost_priority_budget_filters_points() {
        let pts = vec![point("cheap", "0.1", 0.3), point("pricey", "1", 0.9)];
        let mode = PreferenceMode::cost_priority(Some(Currency::parse("0.2").unwrap())).unwrap();
        let result = select_with_preference(&pts, &mode).unwrap();
        assert_eq!(result.chosen, "cheap");
    }

    #[test]
    fn cost_priority_infeasible_budget_errors() {
        let pts = vec![point("pricey", "1", 0.9)];
        let mode = PreferenceMode::cost_priority(Some(Currency::parse("0.5").unwrap())).unwrap();
        assert!(matches!(
            select_with_preference(&pts, &mode),
            Err(Error::BudgetInfeasible(_))
        ));
    }

    #[test]
    fn cost_priority_without_budget_keeps_cheapest_quartile() {
        let pts: Vec<ParetoPoint> = (0..8)
            .map(|i| point(&format!("m{i}"), &format!("0.{}", i + 1), 0.1 * i as f64))
            .collect();
        let result =
            select_with_preference(&pts, &PreferenceMode::CostPriority { budget: None }).unwrap();
        // quartile of 8 = 2 cheapest points -> m0 or m1 only
        assert!(result.chosen == "m0" || result.chosen == "m1");
    }

    #[test]
    fn auto_selection_ignores_dominated_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        for _ in 0..50 {
            let n = rng.gen_range(2..=8);
            let mut pts: Vec<ParetoPoint> = (0..n)
                .map(|i| {
                    point(
                        &format!("m{i}"),
                        &format!("0.{:04}", 1 + rng.gen_range(0..9998)),
                        rng.gen_range(0.1..1.0),
                    )
                })
                .collect();
            let before = select_with_preference(&pts, &PreferenceMode::Auto).unwrap();
            // add a point dominated by an existing one
            let host = pts[rng.gen_range(0..pts.len())].clone();
            pts.push(ParetoPoint {
                model_id: "zz-dominated".into(),
                cost: host.cost + Currency::parse("0.1").unwrap(),
                score: host.score - 0.05,
            });
            let after = select_with_preference(&pts, &PreferenceMode::Auto).unwrap();
            assert_eq!(before.chosen, after.chosen);
        }
    }

    #[test]
    fn chosen_is_always_on_frontier_with_maximal_closeness() {
        let mut rng = ChaCha8Rng::seed_from_u64(48);
        for _ in 0..100 {
            let n = rng.gen_range(1..=9);
            let pts: Vec<ParetoPoint> = (0..n)
                .map(|i| {
                    point(
                        &format!("m{i}"),
                        &format!("0.{:03}", rng.gen_range(0..999)),
                        rng.gen_range(0.0..1.0),
                    )
                })
                .collect();
            for mode in [
                PreferenceMode::Auto,
                PreferenceMode::PerformancePriority,
                PreferenceMode::CostPriority { budget: None },
            ] {
                let r = select_with_preference(&pts, &mode).unwrap();
                assert!(r.frontier.iter().any(|p| p.model_id == r.chosen));
                assert!(r.closenesses.iter().all(|&c| c <= r.closeness));
            }
        }
    }
}
