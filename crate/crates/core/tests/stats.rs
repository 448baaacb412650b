mod common;

use common::{mi_oracle, pearson_oracle, rank_bins};
use predsens::stats::{bootstrap_significance, fleiss_kappa, mutual_information, point_biserial, quantile_bins};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fixture(seed: u64, n: usize) -> (Vec<bool>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
        let scores: Vec<f64> = labels
            .iter()
            .map(|&l| rng.random_range(-1.0..1.0) + if l { 0.5 } else { 0.0 })
            .collect();
        if labels.iter().any(|l| *l) && labels.iter().any(|l| !*l) {
            return (labels, scores);
        }
    }
}

#[test]
fn point_biserial_matches_pearson_on_coded_labels() {
    for seed in 0..50 {
        let (labels, scores) = fixture(seed, 20 + seed as usize * 3);
        let r = point_biserial(&labels, &scores).unwrap();
        let oracle = pearson_oracle(&labels, &scores);
        assert!((r - oracle).abs() <= 1e-12, "seed {seed}: {r} vs {oracle}");
    }
}

#[test]
fn mutual_information_matches_joint_histogram() {
    for seed in 0..50 {
        let (labels, mut scores) = fixture(seed, 40 + seed as usize);
        // Force ties so the shared-bin rule is exercised.
        for s in scores.iter_mut().step_by(5) {
            *s = (*s * 2.0).round() / 2.0;
        }
        for bins in [2, 3, 8] {
            let mi = mutual_information(&labels, &scores, bins).unwrap();
            let oracle = mi_oracle(&labels, &rank_bins(&scores, bins), bins);
            assert!((mi - oracle).abs() <= 1e-12, "seed {seed} bins {bins}: {mi} vs {oracle}");
            assert_eq!(quantile_bins(&scores, bins).unwrap(), rank_bins(&scores, bins));
        }
    }
}

#[test]
fn mutual_information_known_values() {
    let labels = [false, true, false, true, true, false];
    let scores: Vec<f64> = labels.iter().map(|&l| f64::from(u8::from(l))).collect();
    let mi = mutual_information(&labels, &scores, 2).unwrap();
    assert!((mi - std::f64::consts::LN_2).abs() < 1e-15);
    let constant = [true; 6];
    assert_eq!(mutual_information(&constant, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 3).unwrap(), 0.0);
    assert!(mutual_information(&labels, &scores, 7).is_err());
}

#[test]
fn fleiss_kappa_hand_fixture() {
    // Rows are [unbiased, biased] counts from 3 raters.
    // Per-row agreement: 1, 1, 1/3, 1/3, mean 2/3. Both categories take half
    // the ratings, so chance agreement is 1/2 and kappa = (2/3 - 1/2) / (1/2).
    let counts = vec![vec![3, 0], vec![0, 3], vec![2, 1], vec![1, 2]];
    let k = fleiss_kappa(&counts, 3).unwrap();
    assert!((k - 1.0 / 3.0).abs() <= 1e-12, "{k}");

    // Agreement 1, 1/3, 1/3, 1; both categories again take half the ratings.
    let counts = vec![vec![3, 0], vec![2, 1], vec![1, 2], vec![0, 3]];
    let observed = (1.0 + 1.0 / 3.0 + 1.0 / 3.0 + 1.0) / 4.0;
    let chance = 0.5f64.powi(2) * 2.0;
    let expected = (observed - chance) / (1.0 - chance);
    assert!((fleiss_kappa(&counts, 3).unwrap() - expected).abs() <= 1e-12);

    let perfect = vec![vec![3, 0], vec![0, 3], vec![3, 0]];
    assert_eq!(fleiss_kappa(&perfect, 3).unwrap(), 1.0);
    assert!(fleiss_kappa(&[vec![2, 0]], 3).is_err());
}

#[test]
fn bootstrap_detects_a_dominant_metric_and_is_reproducible() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let labels: Vec<bool> = (0..200).map(|_| rng.random_bool(0.5)).collect();
    let a: Vec<f64> = labels.iter().map(|&l| f64::from(u8::from(l))).collect();
    let b: Vec<f64> = (0..200).map(|_| rng.random::<f64>()).collect();
    let first = bootstrap_significance(&labels, &a, &b, 1000, 42).unwrap();
    let second = bootstrap_significance(&labels, &a, &b, 1000, 42).unwrap();
    assert_eq!(first, second);
    assert_eq!(first.p_value.to_bits(), second.p_value.to_bits());
    assert!(first.p_value < 0.05, "{}", first.p_value);
}

#[test]
fn bootstrap_null_is_near_one_half() {
    let (labels, scores) = fixture(9, 200);
    let noisy: Vec<f64> = scores.iter().enumerate().map(|(i, s)| s + ((i * 7919) % 13) as f64 * 0.01).collect();
    let p = bootstrap_significance(&labels, &scores, &noisy, 1000, 1).unwrap().p_value;
    let q = bootstrap_significance(&labels, &noisy, &scores, 1000, 1).unwrap().p_value;
    assert!((p + q - 1.0).abs() < 1e-12, "{p} + {q}");

    let same = bootstrap_significance(&labels, &scores, &scores, 1000, 1).unwrap().p_value;
    assert!((same - 0.5).abs() <= 0.1, "{same}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn point_biserial_bounded_and_flips_sign(seed in 0u64..10_000, n in 4usize..80) {
        let (labels, scores) = fixture(seed, n);
        let r = point_biserial(&labels, &scores).unwrap();
        prop_assert!((-1.0..=1.0).contains(&r));
        let inverted: Vec<bool> = labels.iter().map(|l| !l).collect();
        let r_inv = point_biserial(&inverted, &scores).unwrap();
        prop_assert!((r + r_inv).abs() < 1e-12);
    }

    #[test]
    fn mutual_information_invariant_under_monotone_transforms(
        seed in 0u64..10_000,
        n in 8usize..100,
        bins in 2usize..8,
        scale in 0.1f64..10.0,
        shift in -5.0f64..5.0,
    ) {
        let (labels, scores) = fixture(seed, n);
        let mi = mutual_information(&labels, &scores, bins).unwrap();
        prop_assert!(mi >= 0.0);
        let transformed: Vec<f64> = scores.iter().map(|s| (scale * s + shift).exp()).collect();
        prop_assert_eq!(mi, mutual_information(&labels, &transformed, bins).unwrap());
    }

    #[test]
    fn kappa_invariant_under_relabeling(rows in prop::collection::vec(0usize..=4, 2..30)) {
        let counts: Vec<Vec<usize>> = rows.iter().map(|&b| vec![4 - b, b]).collect();
        let swapped: Vec<Vec<usize>> = counts.iter().map(|c| vec![c[1], c[0]]).collect();
        let k = fleiss_kappa(&counts, 4).unwrap();
        prop_assert!((k - fleiss_kappa(&swapped, 4).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn bootstrap_swap_is_complementary(seed in 0u64..1000) {
        let (labels, a) = fixture(seed, 60);
        let (_, b) = fixture(seed + 1, 60);
        let ab = bootstrap_significance(&labels, &a, &b, 200, seed).unwrap();
        let ba = bootstrap_significance(&labels, &b, &a, 200, seed).unwrap();
        prop_assert!((0.0..=1.0).contains(&ab.p_value));
        prop_assert!((ab.p_value + ba.p_value - 1.0).abs() < 1e-12);
    }
}
