mod common;

use proptest::prelude::*;

use common::*;
use topm_core::complexity::{
    h_constant, sample_complexity_bound, solve_l1_design, ComplexityKind,
};
use topm_core::engine::{compute_bt, compute_ct, stopping_stat, BRule, StoppingRule};
use topm_core::estimator::EstimatorState;
use topm_core::indices::{
    gap_index, index_matrix, IndexConfig, IndexKind, IndexMatrix, Threshold,
};
use topm_core::instances::make_canonical_instance;
use topm_core::linalg::PosDefState;
use topm_core::seeding::TieBreak;

fn vector(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, n)
}

/// Features (K arms in R^N) plus a pull sequence with rewards.
fn estimator_case() -> impl Strategy<Value = (Vec<Vec<f64>>, f64, Vec<(usize, f64)>)> {
    (2usize..6, 1usize..5).prop_flat_map(|(k, n)| {
        (
            prop::collection::vec(vector(n), k),
            0.01..2.0f64,
            prop::collection::vec((0..k, -3.0..3.0f64), 0..60),
        )
    })
}

fn heuristic() -> Threshold {
    Threshold::Heuristic { delta: 0.05 }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn sherman_morrison_tracks_dense_inverse(
        (n, lambda, updates) in (1usize..7).prop_flat_map(|n| (
            Just(n),
            0.01..3.0f64,
            prop::collection::vec(vector(n), 0..80),
        ))
    ) {
        let mut state = PosDefState::scaled_identity(n, lambda).unwrap();
        for x in &updates {
            state.rank_one_update(x).unwrap();
        }
        let oracle = batch_inverse(n, lambda, &updates);
        let oracle: Vec<f64> = (0..n * n).map(|e| oracle[(e / n, e % n)]).collect();
        prop_assert!(max_abs_diff(state.inverse(), &oracle) <= 1e-8);
    }

    #[test]
    fn quadratic_form_never_increases(
        (y, updates) in (1usize..6).prop_flat_map(|n| (vector(n), prop::collection::vec(vector(n), 1..30)))
    ) {
        let mut state = PosDefState::scaled_identity(y.len(), 0.5).unwrap();
        let mut last = state.quad_form(&y).unwrap();
        for x in &updates {
            state.rank_one_update(x).unwrap();
            let q = state.quad_form(&y).unwrap();
            prop_assert!(q <= last + 1e-12 * (1.0 + last));
            last = q;
        }
    }

    #[test]
    fn single_arm_design_majorizes(
        (features, lambda, pulls) in estimator_case(),
        y_seed in vector(4),
    ) {
        let k = features.len();
        let n = features[0].len();
        let y: Vec<f64> = y_seed.iter().cycle().take(n).copied().collect();
        let mut counts = vec![0u64; k];
        for &(a, _) in &pulls {
            counts[a] += 1;
        }
        let full = quad_with_counts(&features, &counts, lambda, &y);
        for a in 0..k {
            let mut only = vec![0u64; k];
            only[a] = counts[a];
            let single = quad_with_counts(&features, &only, lambda, &y);
            prop_assert!(full <= single * (1.0 + 1e-9) + 1e-12);
        }
    }

    #[test]
    fn incremental_estimate_matches_batch((features, lambda, pulls) in estimator_case()) {
        let mut est = EstimatorState::new(features.clone(), lambda, 0.5).unwrap();
        for &(a, r) in &pulls {
            est.update(a, r).unwrap();
        }
        let oracle = batch_theta(&features, lambda, &pulls);
        prop_assert!(max_abs_diff(est.theta_hat(), &oracle) <= 1e-8);
        prop_assert_eq!(est.round(), pulls.len() as u64);
        prop_assert_eq!(est.counts().iter().sum::<u64>(), est.round());
    }

    #[test]
    fn deviation_bounds((features, lambda, pulls) in estimator_case()) {
        let sigma = 0.5;
        let mut est = EstimatorState::new(features.clone(), lambda, sigma).unwrap();
        for &(a, r) in &pulls {
            est.update(a, r).unwrap();
        }
        let k = features.len();
        for i in 0..k {
            for j in 0..k {
                let diff: Vec<f64> = features[i].iter().zip(&features[j]).map(|(a, b)| a - b).collect();
                let paired = est.deviation(&diff).unwrap();
                // triangle inequality for the Mahalanobis norm
                prop_assert!(paired <= est.arm_deviation(i) + est.arm_deviation(j) + 1e-12);
            }
            // the norm bound holds along the pulled feature itself
            for &s in &[1.0, -0.5, 3.0] {
                let y: Vec<f64> = features[i].iter().map(|v| v * s).collect();
                let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
                let xa2: f64 = features[i].iter().map(|v| v * v).sum();
                let bound = sigma * norm / (est.counts()[i] as f64 * xa2 + lambda).sqrt();
                prop_assert!(est.deviation(&y).unwrap() <= bound * (1.0 + 1e-9) + 1e-12);
            }
        }
    }

    #[test]
    fn index_matrix_identities((features, lambda, pulls) in estimator_case(), t in 1u64..10_000) {
        let mut est = EstimatorState::new(features.clone(), lambda, 0.5).unwrap();
        for &(a, r) in &pulls {
            est.update(a, r).unwrap();
        }
        let k = features.len();
        let paired_cfg = IndexConfig { kind: IndexKind::Paired, threshold: heuristic() };
        let ind_cfg = IndexConfig { kind: IndexKind::Individual, threshold: heuristic() };
        let paired = index_matrix(&est, &paired_cfg, t).unwrap();
        let ind = index_matrix(&est, &ind_cfg, t).unwrap();
        for i in 0..k {
            for j in 0..k {
                let direct = gap_index(&est, i, j, &paired_cfg, t).unwrap();
                prop_assert!((paired.get(i, j) - direct).abs() <= 1e-9 * (1.0 + direct.abs()));
                let direct = gap_index(&est, i, j, &ind_cfg, t).unwrap();
                prop_assert!((ind.get(i, j) - direct).abs() <= 1e-9 * (1.0 + direct.abs()));
                let w = paired.width(i, j);
                prop_assert!(w >= 0.0);
                prop_assert!((paired.get(i, j) + paired.get(j, i) - 2.0 * w).abs() <= 1e-9 * (1.0 + w));
                prop_assert!(paired.get(i, j) <= ind.get(i, j) + 1e-9);
            }
            prop_assert!(paired.get(i, i).abs() <= 1e-9);
        }
    }

    #[test]
    fn lemma1_and_challenger_identity(seed in any::<u64>(), k in 2usize..7) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let b = random_matrix(&mut rng, k);
        let ties = TieBreak::from_seed(k, seed);
        for m in 1..k {
            prop_assert_eq!(lemma1_violations(&b, m), 0);
            for set in subsets(k, m) {
                let bt = compute_bt(BRule::MaxOverOutside, &set, &b, m, &ties).unwrap();
                let ct = compute_ct(&set, bt, &b, &ties).unwrap();
                prop_assert!(set.contains(&bt) && !set.contains(&ct));
                let brute = set.iter()
                    .flat_map(|&j| (0..k).filter(|i| !set.contains(i)).map(move |i| (i, j)))
                    .map(|(i, j)| b.get(i, j))
                    .fold(f64::NEG_INFINITY, f64::max);
                prop_assert_eq!(b.get(ct, bt), brute);
                let lucb = stopping_stat(StoppingRule::Lucb, &set, bt, ct, &b, m);
                let ugape = stopping_stat(StoppingRule::Ugape, &set, bt, ct, &b, m);
                prop_assert!(ugape <= lucb);
            }
        }
    }

    #[test]
    fn l1_design_is_optimal(
        (features, i, j) in (2usize..6, 1usize..4).prop_flat_map(|(k, n)| (
            prop::collection::vec(vector(n), k),
            0..k,
            0..k,
        ))
    ) {
        match (solve_l1_design(&features, i, j), l1_by_enumeration(&features, i, j)) {
            (Ok(w), Some(best)) => {
                prop_assert!(w.residual <= 1e-8);
                prop_assert!((w.l1 - best).abs() <= 1e-8 * (1.0 + best), "{} vs {}", w.l1, best);
            }
            // x_i − x_j always lies in the span of the features
            (got, oracle) => prop_assert!(false, "{:?} / {:?}", got, oracle),
        }
    }

    #[test]
    fn thresholds_are_monotone(t in 1.0..1e6f64, d1 in 0.001..0.5f64, d2 in 0.001..0.5f64) {
        let (lo, hi) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
        let kinds = |delta: f64| vec![
            Threshold::Heuristic { delta },
            Threshold::Classical { delta, arms: 5 },
            Threshold::Theoretical { delta, dim: 3, feature_bound: 1.0, param_bound: 1.0, lambda: 0.025, sigma: 0.5 },
        ];
        for (a, b) in kinds(lo).into_iter().zip(kinds(hi)) {
            prop_assert!(a.value(t + 1.0).unwrap() >= a.value(t).unwrap());
            prop_assert!(a.value(t).unwrap() >= b.value(t).unwrap());
        }
    }

    #[test]
    fn bound_is_monotone(h1 in 0.0..5e3f64, h2 in 0.0..5e3f64, d1 in 0.001..0.5f64, d2 in 0.001..0.5f64) {
        let (hl, hh) = if h1 < h2 { (h1, h2) } else { (h2, h1) };
        let (dl, dh) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
        let at = |h: f64, delta: f64| sample_complexity_bound(h, &Threshold::Heuristic { delta }, 0).unwrap();
        prop_assert!(at(hl, dl) <= at(hh, dl));
        prop_assert!(at(hl, dh) <= at(hl, dl));
    }

    #[test]
    fn constants_scale_inverse_quadratically(
        mu in prop::collection::vec(0.0..1.0f64, 3..7),
        s in 0.1..10.0f64,
    ) {
        let m = 1;
        let base = make_canonical_instance(&mu).unwrap();
        let scaled_mu: Vec<f64> = mu.iter().map(|v| v * s).collect();
        let scaled = make_canonical_instance(&scaled_mu).unwrap();
        let gp = base.gap_profile(m).unwrap();
        prop_assume!(gp.min_gap > 1e-3);
        for kind in ComplexityKind::ALL {
            let a = h_constant(kind, &base, m, 0.0, 0.5).unwrap().h;
            let b = h_constant(kind, &scaled, m, 0.0, 0.5).unwrap().h;
            prop_assert!((b * s * s - a).abs() <= 1e-8 * a, "{:?}: {} vs {}", kind, a, b * s * s);
        }
    }
}

#[test]
fn hand_computed_canonical_indices() {
    // three canonical arms, λ = 0.1, pulls: arm0 ×2 (1.0, 0.0), arm2 ×1 (0.5)
    let lambda = 0.1;
    let sigma = 0.5;
    let feats: Vec<Vec<f64>> = (0..3)
        .map(|a| (0..3).map(|i| if i == a { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut est = EstimatorState::new(feats, lambda, sigma).unwrap();
    est.update(0, 1.0).unwrap();
    est.update(0, 0.0).unwrap();
    est.update(2, 0.5).unwrap();
    let counts = [2.0, 0.0, 1.0];
    let sums = [1.0, 0.0, 0.5];
    let c = Threshold::Heuristic { delta: 0.05 }.value(3.0).unwrap();
    let cfg = IndexConfig { kind: IndexKind::Individual, threshold: heuristic() };
    let b = index_matrix(&est, &cfg, 3).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let mean = |a: usize| sums[a] / (lambda + counts[a]);
            let w = |a: usize| 1.0 / (lambda + counts[a]).sqrt();
            let want = mean(i) - mean(j) + c * sigma * (w(i) + w(j));
            assert!((b.get(i, j) - want).abs() < 1e-12, "({i},{j})");
        }
    }
}

#[test]
fn fresh_paired_matrix_is_prior_width() {
    let feats = vec![vec![1.0, 0.0], vec![0.6, 0.8], vec![0.0, -1.0]];
    let lambda = 0.2;
    let est = EstimatorState::new(feats.clone(), lambda, 0.5).unwrap();
    let cfg = IndexConfig { kind: IndexKind::Paired, threshold: heuristic() };
    let b: IndexMatrix = index_matrix(&est, &cfg, 1).unwrap();
    let c = heuristic().value(1.0).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let d: f64 = feats[i].iter().zip(&feats[j]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            assert!((b.get(i, j) - c * 0.5 * d / lambda.sqrt()).abs() < 1e-12);
            assert_eq!(b.get(i, j), b.get(j, i));
        }
    }
}

#[test]
fn norm_bound_fails_off_the_pulled_direction() {
    let feats = vec![vec![0.0, -1.3564129194620649], vec![-0.2563445888744782, 0.0]];
    let (lambda, sigma) = (0.01, 0.5);
    let mut est = EstimatorState::new(feats.clone(), lambda, sigma).unwrap();
    est.update(0, 0.0).unwrap();
    let y = [feats[0][0] - feats[1][0], feats[0][1] - feats[1][1]];
    let norm = (y[0] * y[0] + y[1] * y[1]).sqrt();
    let xa2 = feats[0][1] * feats[0][1];
    let bound = sigma * norm / (xa2 + lambda).sqrt();
    let dev = est.deviation(&y).unwrap();
    let oracle = quad_with_counts(&feats, &[1, 0], lambda, &y).sqrt() * sigma;
    assert!((dev - oracle).abs() < 1e-12);
    assert!(dev > 2.0 * bound, "{dev} vs {bound}");
}
