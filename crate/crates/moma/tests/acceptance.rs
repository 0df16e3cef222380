//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line (visible with `cargo test --test acceptance -- --nocapture`).
//!
//! Tolerances are pinned in the assertions; the end-to-end criteria run the
//! default harness configuration (8 models x 6 domains x 200 queries, seed 42).

use std::collections::BTreeSet;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use moma::agentroute::{build_mask, kmeans, masked_decode};
use moma::catalog::{
    AgentDescriptor, AgentStatus, ComparisonRecord, Currency, ModelCatalog, ModelProfile,
    OutcomeLabel, PreferenceMode,
};
use moma::elo::compute_elo;
use moma::encoder::{Embedding, Encoder, HashingEncoder};
use moma::gateway::{run_harness, GatewayConfig, GatewayState, HarnessConfig, HarnessReport};
use moma::grk::{
    base_probs, load_params, loss_gradient, loss_grk, outcome_distribution, save_params,
    RouterParams, TrainingExample,
};
use moma::selector::{pareto_frontier, topsis_select, ParetoPoint, Weights};

fn pass(criterion: &str, detail: String) {
    println!("ACCEPT {criterion}: PASS ({detail})");
}

fn shared_report() -> &'static HarnessReport {
    static REPORT: OnceLock<HarnessReport> = OnceLock::new();
    REPORT.get_or_init(|| run_harness(&HarnessConfig::default()).expect("harness run"))
}

#[test]
fn acceptance_01_grk_simplex() {
    // draw ranges keep every class probability representable away from 0 and 1
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0001);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let beta_a = rng.gen_range(-8.0..8.0);
        let beta_b = rng.gen_range(-8.0..8.0);
        let theta = 1.0 + rng.gen_range(1e-6..15.0);
        let kappa = rng.gen_range(0.1..1.5);
        let margin = rng.gen_range(0.0..2.0);
        let dist = outcome_distribution(beta_a, beta_b, theta, kappa, margin).unwrap();
        let sum: f64 = dist.probs().iter().sum();
        worst = worst.max((sum - 1.0).abs());
        assert!(
            (sum - 1.0).abs() < 1e-9,
            "sum {sum} at ({beta_a}, {beta_b}, {theta}, {kappa}, {margin})"
        );
        assert!(
            dist.probs().iter().all(|&p| p > 0.0),
            "non-positive class probability at ({beta_a}, {beta_b}, {theta}, {kappa}, {margin})"
        );
    }
    pass("01 grk-simplex", format!("10000 draws, worst |sum-1| = {worst:.3e}"));
}

#[test]
fn acceptance_02_gradient_matches_finite_differences() {
    let dim = 16;
    let params = RouterParams::init(dim, 4, 3, 2, 1.3, 0.2, 0xACCE).unwrap();
    let encoder = HashingEncoder::new(dim, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0002);
    let batch: Vec<TrainingExample> = (0..8)
        .map(|i| {
            let a = rng.gen_range(0..4);
            let b = (a + 1 + rng.gen_range(0..3)) % 4;
            TrainingExample {
                features: encoder.encode(&format!("gradient probe query {i}")),
                model_a: a,
                model_b: b,
                label: OutcomeLabel::from_index(rng.gen_range(0..5)).unwrap(),
            }
        })
        .collect();
    let grad = loss_gradient(&params, &batch).unwrap();
    let h = 1e-5;
    let mut worst = 0.0f64;
    for _ in 0..25 {
        let idx = rng.gen_range(0..params.param_count());
        let mut plus = params.clone();
        plus.nudge(idx, h);
        let mut minus = params.clone();
        minus.nudge(idx, -h);
        let fd = (loss_grk(&plus, &batch).unwrap() - loss_grk(&minus, &batch).unwrap()) / (2.0 * h);
        let rel = (grad[idx] - fd).abs() / fd.abs().max(grad[idx].abs()).max(1e-8);
        worst = worst.max(rel);
        assert!(rel < 1e-4, "coordinate {idx}: analytic {} vs fd {fd}", grad[idx]);
    }
    pass("02 gradient-oracle", format!("25 coordinates, worst rel err = {worst:.3e}"));
}

#[test]
fn acceptance_03_base_probability_spot_values() {
    let (w, l, t) = base_probs(0.3, 0.3, 3.0).unwrap();
    assert!((w - 0.25).abs() < 1e-9);
    assert!((l - 0.25).abs() < 1e-9);
    assert!((t - 0.5).abs() < 1e-9);

    let (w, l, t) = base_probs(1.0, 0.0, std::f64::consts::E).unwrap();
    let expect_lose = 1.0 / (1.0 + std::f64::consts::E.powi(2));
    assert!((w - 0.5).abs() < 1e-9);
    assert!((l - expect_lose).abs() < 1e-9);
    assert!((t - (0.5 - expect_lose)).abs() < 1e-9);
    pass("03 base-prob-spot-values", "both closed-form points within 1e-9".into());
}

fn random_grid_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<ParetoPoint> {
    (0..n)
        .map(|i| {
            ParetoPoint::new(
                format!("m{i}"),
                Currency::parse(&format!("{}", rng.gen_range(0..5))).unwrap(),
                rng.gen_range(0..5) as f64,
            )
        })
        .collect()
}

fn brute_force_frontier(points: &[ParetoPoint]) -> Vec<ParetoPoint> {
    let dominates = |q: &ParetoPoint, p: &ParetoPoint| {
        q.cost <= p.cost && q.score >= p.score && (q.cost < p.cost || q.score > p.score)
    };
    let mut kept: Vec<ParetoPoint> = points
        .iter()
        .filter(|p| !points.iter().any(|q| dominates(q, p)))
        .cloned()
        .collect();
    kept.sort_by(|a, b| {
        a.cost
            .cmp(&b.cost)
            .then_with(|| b.score.partial_cmp(&a.score).unwrap())
            .then_with(|| a.model_id.cmp(&b.model_id))
    });
    kept
}

#[test]
fn acceptance_04_pareto_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0004);
    for trial in 0..1000 {
        let n = rng.gen_range(1..=12);
        let points = random_grid_points(&mut rng, n);
        let got = pareto_frontier(&points).unwrap();
        let oracle = brute_force_frontier(&points);
        assert_eq!(got, oracle, "trial {trial}");
    }
    pass("04 pareto-oracle", "1000 random sets, exact match".into());
}

#[test]
fn acceptance_05_topsis_ideal_points_oracle_and_ties() {
    // ideal point (cheapest, best) scores exactly 1; anti-ideal exactly 0
    let pts = vec![
        ParetoPoint::new("ideal", Currency::parse("0.1").unwrap(), 0.9),
        ParetoPoint::new("anti", Currency::parse("2.0").unwrap(), 0.1),
    ];
    let result = topsis_select(&pts, Weights::new(0.5, 0.5).unwrap()).unwrap();
    assert_eq!(result.chosen, "ideal");
    assert_eq!(result.closeness, 1.0);
    let anti = result.frontier.iter().position(|p| p.model_id == "anti").unwrap();
    assert_eq!(result.closenesses[anti], 0.0);

    // random frontiers must match the exhaustive-closeness oracle
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0005);
    for trial in 0..500 {
        let n = rng.gen_range(1..=10);
        let points: Vec<ParetoPoint> = (0..n)
            .map(|i| {
                ParetoPoint::new(
                    format!("m{i}"),
                    Currency::parse(&format!("0.{:04}", rng.gen_range(0..9999))).unwrap(),
                    rng.gen_range(0.0..1.0),
                )
            })
            .collect();
        let frontier = pareto_frontier(&points).unwrap();
        let weights = Weights::new(rng.gen_range(0.0..1.0), rng.gen_range(0.01..1.0)).unwrap();
        let result = topsis_select(&frontier, weights).unwrap();

        let norms: Vec<(f64, f64)> = moma::selector::normalize(&result.frontier).unwrap();
        let mut best_idx = 0;
        let mut best_phi = f64::NEG_INFINITY;
        for (i, &(c, s)) in norms.iter().enumerate() {
            let d_plus = ((weights.cost * c).powi(2) + (weights.score * (1.0 - s)).powi(2)).sqrt();
            let d_minus = ((weights.cost * (1.0 - c)).powi(2) + (weights.score * s).powi(2)).sqrt();
            let phi = if d_plus + d_minus == 0.0 { 0.5 } else { d_minus / (d_plus + d_minus) };
            let p = &result.frontier[i];
            let b = &result.frontier[best_idx];
            let better = phi > best_phi
                || (phi == best_phi
                    && (p.score > b.score
                        || (p.score == b.score && p.cost < b.cost)
                        || (p.score == b.score && p.cost == b.cost && p.model_id < b.model_id)));
            if better {
                best_phi = phi;
                best_idx = i;
            }
        }
        assert_eq!(result.chosen, result.frontier[best_idx].model_id, "trial {trial}");
    }

    // constructed closeness ties: higher raw score wins, then lower cost
    let tied = vec![
        ParetoPoint::new("low-score", Currency::parse("1").unwrap(), 0.4),
        ParetoPoint::new("high-score", Currency::parse("2").unwrap(), 0.8),
    ];
    // symmetric normalized coordinates (0,0) and (1,1) tie at any equal weights
    let result = topsis_select(&tied, Weights::new(0.5, 0.5).unwrap()).unwrap();
    assert_eq!(result.chosen, "high-score", "score breaks the closeness tie");
    let dup = vec![
        ParetoPoint::new("b-dup", Currency::parse("1").unwrap(), 0.4),
        ParetoPoint::new("a-dup", Currency::parse("1").unwrap(), 0.4),
    ];
    let result = topsis_select(&dup, Weights::new(0.5, 0.5).unwrap()).unwrap();
    assert_eq!(result.chosen, "a-dup", "identical points fall to the id tie-break");
    pass("05 topsis", "ideal/anti-ideal exact, 500 oracle trials, tie chain verified".into());
}

#[test]
fn acceptance_06_masking() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0006);
    for trial in 0..10_000 {
        let n = rng.gen_range(1..16);
        let vocabulary: Vec<String> = (0..n).map(|i| format!("agent{i}")).collect();
        let k = rng.gen_range(1..=n);
        let mut indices: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            indices.swap(i, rng.gen_range(0..=i));
        }
        let available: BTreeSet<String> =
            indices[..k].iter().map(|&i| vocabulary[i].clone()).collect();
        let mask = build_mask(&vocabulary, &available).unwrap();
        let logits: Vec<f64> = (0..n).map(|_| rng.gen_range(-40.0..40.0)).collect();
        let (chosen, probs) = masked_decode(&logits, &mask).unwrap();
        assert!(available.contains(&vocabulary[chosen]), "trial {trial}: masked argmax");
        let mut allowed_sum = 0.0;
        for (i, &p) in probs.iter().enumerate() {
            if mask.is_allowed(i) {
                allowed_sum += p;
            } else {
                assert_eq!(p, 0.0, "trial {trial}: masked probability must be exactly 0");
            }
        }
        assert!((allowed_sum - 1.0).abs() < 1e-9, "trial {trial}: sum {allowed_sum}");
    }
    pass("06 masking", "10000 random (logits, mask) pairs".into());
}

#[test]
fn acceptance_07_kmeans_objective() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0007);
    for trial in 0..100 {
        let n = rng.gen_range(4..40);
        let dim = rng.gen_range(2..6);
        let vectors: Vec<Embedding> = (0..n)
            .map(|_| {
                Embedding::new((0..dim).map(|_| rng.gen_range(-5.0..5.0)).collect()).unwrap()
            })
            .collect();
        let k = rng.gen_range(1..=n.min(8));
        let result = kmeans(&vectors, k, 40, trial as u64).unwrap();
        for w in result.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "trial {trial}: objective rose {} -> {}", w[0], w[1]);
        }
    }

    // k == n: every distinct point becomes its own centroid
    let vectors: Vec<Embedding> = (0..12)
        .map(|i| Embedding::new(vec![i as f64, (i * i) as f64]).unwrap())
        .collect();
    let result = kmeans(&vectors, 12, 20, 9).unwrap();
    assert!(result.objective() < 1e-12, "objective {}", result.objective());
    pass("07 kmeans", "100 random instances non-increasing; k=n objective 0".into());
}

#[test]
fn acceptance_08_elo_conservation_and_spot_update() {
    let record = |a: &str, b: &str, label| ComparisonRecord {
        query_text: "q".into(),
        model_a: a.into(),
        model_b: b.into(),
        label,
    };
    // equal ratings, K=32: winner gains exactly 16
    let table = compute_elo(&[record("a", "b", OutcomeLabel::WinA)], 32.0, 1000.0).unwrap();
    assert_eq!(table.rating("a"), Some(1016.0));
    assert_eq!(table.rating("b"), Some(984.0));

    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0008);
    let models: Vec<String> = (0..7).map(|i| format!("m{i}")).collect();
    for trial in 0..50 {
        let mut records = Vec::new();
        for _ in 0..rng.gen_range(1..400) {
            let a = rng.gen_range(0..models.len());
            let b = (a + 1 + rng.gen_range(0..models.len() - 1)) % models.len();
            records.push(record(
                &models[a],
                &models[b],
                OutcomeLabel::from_index(rng.gen_range(0..5)).unwrap(),
            ));
        }
        let table = compute_elo(&records, 32.0, 1000.0).unwrap();
        let total: f64 = table.ratings().values().sum();
        let expect = table.len() as f64 * 1000.0;
        assert!((total - expect).abs() < 1e-6, "trial {trial}: total {total} vs {expect}");
    }
    pass("08 elo", "conservation within 1e-6 over 50 random logs; spot update exact".into());
}

fn cache_test_gateway() -> GatewayState {
    let mut config = GatewayConfig::default();
    config.encoder.dim = 64;
    config.categories.cluster_count = Some(2);
    let catalog = ModelCatalog::new(vec![ModelProfile {
        id: "only-model".into(),
        display_name: "Only".into(),
        input_price: Currency::parse("0.001").unwrap(),
        output_price: Currency::parse("0.002").unwrap(),
        tags: BTreeSet::new(),
    }])
    .unwrap();
    let agent = |name: &str, description: &str| AgentDescriptor {
        name: name.into(),
        description: description.into(),
        input_params: vec![],
        output_params: vec![],
        few_shot_examples: vec![],
        status: AgentStatus::Active,
        category_ids: BTreeSet::new(),
    };
    let agents = vec![
        agent("travel.flights", "search flights airlines tickets booking"),
        agent("travel.hotels", "search hotels rooms booking nights"),
        agent("food.recipes", "recipes cooking ingredients kitchen meals"),
    ];
    GatewayState::new(config, catalog, None, agents, vec![], None).unwrap()
}

#[test]
fn acceptance_09_cache_equivalence_and_lru() {
    // normalization-equal queries share an entry, and the hit decision equals
    // the decision full routing produces on an identical snapshot
    let gw_cached = cache_test_gateway();
    let gw_fresh = cache_test_gateway();
    let original = "Search   FLIGHTS airlines tickets booking";
    let variant = "search flights airlines tickets   BOOKING";

    let miss = gw_cached.route(original, &PreferenceMode::Auto).unwrap();
    assert!(!miss.diagnostics.cache_hit);
    let hit = gw_cached.route(variant, &PreferenceMode::Auto).unwrap();
    assert!(hit.diagnostics.cache_hit, "normalized forms must collide");
    let full = gw_fresh.route(variant, &PreferenceMode::Auto).unwrap();
    assert_eq!(hit.chosen, full.chosen);
    assert_eq!(hit.path, full.path);
    assert_eq!(hit.diagnostics.candidates, full.diagnostics.candidates);
    assert_eq!(gw_cached.cache_stats().hits, 1);

    // LRU trace oracle on the raw cache
    let mut cache = moma::cache::PrefetchCache::new(4).unwrap();
    let mut model: Vec<String> = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0009);
    for step in 0..2000 {
        let key = format!("k{}", rng.gen_range(0..10));
        if rng.gen_bool(0.5) {
            let hit = cache.lookup(&key).is_some();
            assert_eq!(hit, model.contains(&key), "step {step}");
            if hit {
                model.retain(|k| k != &key);
                model.push(key);
            }
        } else {
            cache.insert(&key, vec!["agent".into()]);
            model.retain(|k| k != &key);
            if model.len() >= 4 {
                model.remove(0);
            }
            model.push(key);
        }
        assert_eq!(cache.len(), model.len(), "step {step}");
    }
    pass("09 cache", "hit == full-route decision; 2000-step LRU trace matches oracle".into());
}

#[test]
fn acceptance_10_harness_accuracy_cost_ordering_determinism() {
    let report = shared_report();
    assert!(
        report.grk.top1_accuracy >= 0.9,
        "grk accuracy {}",
        report.grk.top1_accuracy
    );
    let cp = report.preference_costs.cost_priority.to_f64();
    let auto = report.preference_costs.auto.to_f64();
    let perf = report.preference_costs.performance_priority.to_f64();
    assert!(
        cp <= auto && auto <= perf,
        "cost ordering violated: {cp} / {auto} / {perf}"
    );

    // rerun with the same seed: byte-identical report
    let rerun = run_harness(&HarnessConfig::default()).unwrap();
    assert_eq!(report.render(), rerun.render());
    pass(
        "10 harness",
        format!(
            "grk top-1 {:.3}, costs {cp} <= {auto} <= {perf}, rerun byte-identical",
            report.grk.top1_accuracy
        ),
    );
}

#[test]
fn acceptance_11_baseline_parity_and_ranking() {
    let report = shared_report();
    assert!(
        report.sft.top1_accuracy >= 0.8,
        "sft accuracy {}",
        report.sft.top1_accuracy
    );
    assert!(
        report.contrastive.top1_accuracy >= 0.8,
        "contrastive accuracy {}",
        report.contrastive.top1_accuracy
    );
    let mut names = report.router_ranking.clone();
    names.sort();
    assert_eq!(names, vec!["contrastive", "grk", "sft"], "all three routers ranked");
    // ranking really is ordered by accuracy
    let acc = |name: &str| match name {
        "grk" => report.grk.top1_accuracy,
        "sft" => report.sft.top1_accuracy,
        "contrastive" => report.contrastive.top1_accuracy,
        other => panic!("unexpected router {other}"),
    };
    for pair in report.router_ranking.windows(2) {
        assert!(acc(&pair[0]) >= acc(&pair[1]));
    }
    pass(
        "11 baselines",
        format!(
            "sft {:.3}, contrastive {:.3}, ranking {:?}",
            report.sft.top1_accuracy, report.contrastive.top1_accuracy, report.router_ranking
        ),
    );
}

#[test]
fn acceptance_12_persistence_round_trip_and_checksum() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("params.bin");
    let params = RouterParams::init(32, 6, 4, 2, 1.7, 0.3, 0xACCE_0012).unwrap();
    save_params(&params, &path).unwrap();
    let loaded = load_params(&path).unwrap();
    assert_eq!(params, loaded, "round trip must be bit-exact");

    let bytes = std::fs::read(&path).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0013);
    for trial in 0..50 {
        let mut corrupt = bytes.clone();
        let idx = rng.gen_range(0..corrupt.len());
        corrupt[idx] ^= 1 << rng.gen_range(0..8);
        let bad = dir.path().join(format!("bad{trial}.bin"));
        std::fs::write(&bad, &corrupt).unwrap();
        assert!(load_params(&bad).is_err(), "bit flip at {idx} went undetected");
    }
    let truncated = dir.path().join("trunc.bin");
    std::fs::write(&truncated, &bytes[..bytes.len() - 9]).unwrap();
    assert!(load_params(&truncated).is_err());
    pass("12 persistence", "bit-exact round trip; 50 corruptions rejected".into());
}
