use predsens::synthetic::{
    default_bounds, diff_quotient, gen_hiring, gen_threshold, least_squares_slope, lipschitz_sweep, run_parity_cases,
    ParityConfig, SyntheticError,
};
use proptest::prelude::*;

#[test]
fn hiring_groups_differ_by_eight_in_hair_length() {
    let data = gen_hiring(10_000, 0).unwrap();
    let mean = |g: u8| {
        let xs: Vec<f64> = data.iter().filter(|r| r.gender == g).map(|r| r.hair_length).collect();
        xs.iter().sum::<f64>() / xs.len() as f64
    };
    assert!((mean(1) - mean(0) - 8.0).abs() <= 0.5);
    assert!(data.iter().all(|r| r.gender <= 1 && (0.0..10.0).contains(&r.education)));
    assert!(matches!(gen_hiring(1, 0), Err(SyntheticError::TooFewRecords(1))));
}

#[test]
fn parity_cases_separate() {
    let data = gen_hiring(10_000, 0).unwrap();
    let r = run_parity_cases(&data, &ParityConfig::default()).unwrap();
    assert!((7.5..=8.5).contains(&r.hair_wrt_gender), "{}", r.hair_wrt_gender);
    assert!(r.education_wrt_gender.abs() <= 0.3, "{}", r.education_wrt_gender);
    assert!(r.case2 < 0.05 && r.case1 > 10.0 * r.case2, "case1 {} case2 {}", r.case1, r.case2);
    assert_eq!(r, run_parity_cases(&data, &ParityConfig::default()).unwrap());
}

#[test]
fn diff_quotient_on_a_binary_column() {
    // From point 0 both gender-1 partners give (1 - 3) / (0 - 1) = 2.
    let a = [1.0, 3.0, 1.0, 3.0];
    let b = [0.0, 1.0, 0.0, 1.0];
    assert_eq!(diff_quotient(&a, &b, 0).unwrap(), 2.0);
    assert!(matches!(diff_quotient(&a, &[0.0; 4], 0), Err(SyntheticError::UndefinedDerivative)));
}

#[test]
fn sweep_tracks_then_plateaus() {
    let data = gen_threshold(1000, 0).unwrap();
    let optimum = least_squares_slope(&data);
    let points = lipschitz_sweep(&default_bounds(20, 0.2), &data, 1.0).unwrap();
    assert_eq!(points.len(), 20);
    for p in &points {
        assert!(p.sensitivity <= p.bound + 1e-9);
        if p.bound < optimum {
            assert!(p.sensitivity / p.bound >= 0.99);
        } else {
            assert!((p.sensitivity - optimum).abs() <= 1e-6);
        }
    }
    assert!(points.windows(2).all(|w| w[1].sensitivity >= w[0].sensitivity));
    let max = points.iter().map(|p| p.sensitivity).fold(0.0, f64::max);
    assert!(max - points.last().unwrap().sensitivity <= 1e-9);
    assert!(lipschitz_sweep(&[0.0], &data, 1.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn diff_quotient_is_linear_in_the_numerator(
        a in prop::collection::vec(-10.0f64..10.0, 6),
        b in prop::collection::vec(0u8..2, 6),
        c in -5.0f64..5.0,
        m in 0usize..6,
    ) {
        let b: Vec<f64> = b.into_iter().map(f64::from).collect();
        prop_assume!(b.iter().any(|&x| x != b[m]));
        let scaled: Vec<f64> = a.iter().map(|x| c * x).collect();
        let base = diff_quotient(&a, &b, m).unwrap();
        prop_assert!((diff_quotient(&scaled, &b, m).unwrap() - c * base).abs() <= 1e-9 * (1.0 + base.abs()));
    }
}
