mod common;

use common::{forward, random_text_model};
use predsens::autodiff::{abs_jacobian, Tensor};
use predsens::corpus::{downsample_protected, export_saliency, gen_toy_corpus, PlantedCorrelation, TextRecord, ToyCorpusSpec};
use predsens::models::{
    fit_scalar_lipschitz, max_constraint_violation, train_classifier, train_lipschitz, train_psm, DiffModel,
    LabeledExample, LipschitzBound, ModelError, NormOrder, TrainConfig,
};
use predsens::sensitivity::{evaluate_variant, PsmAggregation, Variant, VariantContext};
use predsens::synthetic::{gen_threshold, least_squares_slope};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn separable(n: usize, seed: u64) -> Vec<LabeledExample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let label = rng.random_range(0..2usize);
            let side = if label == 1 { 1.0 } else { -1.0 };
            let x = vec![rng.random_range(-2.0..2.0), side * rng.random_range(0.3..2.0)];
            LabeledExample::tabular(x, label, None)
        })
        .collect()
}

fn examples(records: &[TextRecord]) -> Vec<LabeledExample> {
    records.iter().map(TextRecord::to_example).collect()
}

#[test]
fn separable_tabular_data_is_learned() {
    let model = train_classifier(&separable(400, 1), &TrainConfig { epochs: 30, ..TrainConfig::default() }).unwrap();
    assert!(model.summary().train_accuracy >= 0.99, "{:?}", model.summary());
}

#[test]
fn toy_corpus_task_reaches_ninety_percent() {
    let spec = ToyCorpusSpec { bias_rate: 0.05, ambiguous_rate: 0.0, ..ToyCorpusSpec::default() };
    let data = examples(&gen_toy_corpus(&spec).unwrap());
    let model = train_classifier(&data, &TrainConfig::default()).unwrap();
    let acc = model.summary().validation_accuracy.unwrap();
    assert!(acc >= 0.9, "validation accuracy {acc}");
}

#[test]
fn invalid_configs_are_rejected() {
    let data = separable(20, 2);
    let zero_epochs = TrainConfig { epochs: 0, ..TrainConfig::default() };
    assert!(matches!(train_classifier(&data, &zero_epochs), Err(ModelError::Config(_))));
    let zero_bound = TrainConfig {
        lipschitz: Some(LipschitzBound { bound: 0.0, norm: NormOrder::L2 }),
        ..TrainConfig::default()
    };
    assert!(matches!(train_lipschitz(&data, &zero_bound), Err(ModelError::Config(_))));
    assert!(matches!(fit_scalar_lipschitz(&[1.0], &[1.0], &zero_bound), Err(ModelError::Config(_))));
    assert!(NormOrder::from_order(3).is_err());

    let one_class: Vec<LabeledExample> = data.iter().map(|e| LabeledExample { label: 0, ..e.clone() }).collect();
    assert!(train_classifier(&one_class, &TrainConfig::default()).is_err());
    assert!(train_classifier(&[], &TrainConfig::default()).is_err());
    let unlabeled: Vec<LabeledExample> = data.iter().map(|e| LabeledExample { protected: None, ..e.clone() }).collect();
    assert!(train_psm(&unlabeled, &TrainConfig::default()).is_err());
    let constant: Vec<LabeledExample> = data.iter().map(|e| LabeledExample { protected: Some(1), ..e.clone() }).collect();
    assert!(train_psm(&constant, &TrainConfig::default()).is_err());
}

fn marker_spec() -> ToyCorpusSpec {
    ToyCorpusSpec {
        planted: vec![PlantedCorrelation {
            token: "pronoun_f".into(),
            protected_class: 1,
            strength: 1.0,
            rate: 0.5,
            target_label: 1,
        }],
        bias_rate: 0.0,
        ..ToyCorpusSpec::default()
    }
}

#[test]
fn psm_learns_a_planted_marker_and_points_v_at_it() {
    let records = gen_toy_corpus(&marker_spec()).unwrap();
    let psm = train_psm(&examples(&records), &TrainConfig::default()).unwrap();
    for (class, acc) in psm.summary().per_class_accuracy.iter().enumerate() {
        assert!(*acc >= 0.99, "class {class} accuracy {acc}");
    }

    let task = train_classifier(&examples(&records), &TrainConfig::default()).unwrap();
    let ctx = VariantContext { psm: Some(&psm), ..VariantContext::default() };
    let mut peaks = 0;
    let marked: Vec<&TextRecord> = records.iter().filter(|r| r.tokens.iter().any(|t| t == "pronoun_f")).take(50).collect();
    for r in &marked {
        let x = task.embed(&r.tokens).unwrap();
        let result = evaluate_variant(Variant::P2, &ctx, &task, &x).unwrap();
        let table = export_saliency(&result, &r.tokens).unwrap();
        if r.tokens[table.v_peak().unwrap()] == "pronoun_f" {
            peaks += 1;
        }
    }
    assert_eq!(peaks, marked.len());
}

#[test]
fn downsampling_a_protected_class_lowers_its_recall() {
    let spec = ToyCorpusSpec { bias_rate: 0.0, ..ToyCorpusSpec::default() };
    let records = gen_toy_corpus(&spec).unwrap();
    let (train, test) = records.split_at(1500);
    let recall = |model: &DiffModel| {
        let members: Vec<&TextRecord> = test.iter().filter(|r| r.protected == 1).collect();
        let hits = members
            .iter()
            .filter(|r| {
                let p = model.predict_tokens(&r.tokens).unwrap();
                p[1] > p[0]
            })
            .count();
        hits as f64 / members.len() as f64
    };
    let cfg = TrainConfig::default();
    let full = train_psm(&examples(train), &cfg).unwrap();
    let thinned = downsample_protected(train, 1, 0.5, 0).unwrap();
    let biased = train_psm(&examples(&thinned), &cfg).unwrap();
    let (before, after) = (recall(&full), recall(&biased));
    assert!(after < before, "recall {before} -> {after}");
}

#[test]
fn scalar_fit_respects_and_reaches_the_bound() {
    let data = gen_threshold(1000, 7).unwrap();
    let xs: Vec<f64> = data.iter().map(|d| d.0).collect();
    let ys: Vec<f64> = data.iter().map(|d| d.1).collect();
    let cfg = |bound| TrainConfig {
        epochs: 100_000,
        learning_rate: 0.01,
        lipschitz: Some(LipschitzBound { bound, norm: NormOrder::L1 }),
        ..TrainConfig::default()
    };
    let tight = fit_scalar_lipschitz(&xs, &ys, &cfg(0.05)).unwrap();
    assert_eq!(tight.theta, 0.05);
    let loose = fit_scalar_lipschitz(&xs, &ys, &cfg(10.0)).unwrap();
    let sxy: f64 = data.iter().map(|(x, y)| x * y).sum();
    let sxx: f64 = data.iter().map(|(x, _)| x * x).sum();
    assert!((loose.theta - sxy / sxx).abs() < 1e-9, "{} vs {}", loose.theta, sxy / sxx);
    assert!((least_squares_slope(&data) - sxy / sxx).abs() < 1e-12);
    assert!(loose.converged && loose.warnings.is_empty());
}

#[test]
fn lipschitz_training_satisfies_the_constraint_on_every_pair() {
    let data = separable(120, 3);
    let inputs: Vec<Vec<f64>> = data
        .iter()
        .map(|e| match &e.input {
            predsens::models::ExampleInput::Features(f) => f.clone(),
            _ => unreachable!(),
        })
        .collect();
    for (bound, norm) in [(0.05, NormOrder::L1), (0.3, NormOrder::L2)] {
        let lb = LipschitzBound { bound, norm };
        let cfg = TrainConfig { lipschitz: Some(lb), epochs: 20, ..TrainConfig::default() };
        let model = train_lipschitz(&data, &cfg).unwrap();
        let violation = max_constraint_violation(&model, &inputs, lb, 0).unwrap();
        assert!(violation <= 1e-6, "L={bound}: violation {violation}");
    }
}

#[test]
fn training_is_deterministic() {
    let spec = ToyCorpusSpec { n: 300, ..ToyCorpusSpec::default() };
    let data = examples(&gen_toy_corpus(&spec).unwrap());
    let cfg = TrainConfig { epochs: 3, ..TrainConfig::default() };
    let a = train_classifier(&data, &cfg).unwrap();
    let b = train_classifier(&data, &cfg).unwrap();
    assert_eq!(a.to_model_string().unwrap(), b.to_model_string().unwrap());
    let c = train_classifier(&data, &TrainConfig { seed: 1, ..cfg }).unwrap();
    assert_ne!(a.fingerprint().unwrap(), c.fingerprint().unwrap());
}

#[test]
fn saved_models_predict_bit_identically() {
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..10 {
        let (model, _) = random_text_model(seed);
        let path = dir.path().join(format!("m{seed}.json"));
        model.save(&path).unwrap();
        let loaded = DiffModel::load(&path).unwrap();
        assert_eq!(loaded, model);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..10 {
            let (n, d) = (rng.random_range(1..=6), model.input_dim());
            let x = Tensor::matrix(n, d, (0..n * d).map(|_| rng.random_range(-3.0..3.0)).collect()).unwrap();
            let (a, b) = (forward(&model, &x), forward(&loaded, &x));
            assert!(a.iter().zip(&b).all(|(p, q)| p.to_bits() == q.to_bits()));
        }
    }
    assert!(DiffModel::from_model_str("{\"format\": \"something else\"}").is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn predictions_are_probability_vectors(seed in 0u64..100_000, scale in 0.1f64..20.0) {
        let (model, x) = random_text_model(seed);
        let x = Tensor::matrix(x.rows(), x.cols(), x.data().iter().map(|v| v * scale).collect()).unwrap();
        let p = forward(&model, &x);
        prop_assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn gradients_are_reproducible(seed in 0u64..100_000) {
        let (model, x) = random_text_model(seed);
        let a = abs_jacobian(&model, &x).unwrap();
        let b = abs_jacobian(&model, &x).unwrap();
        for k in 0..a.classes() {
            prop_assert!(a.row(k).iter().zip(b.row(k)).all(|(p, q)| p.to_bits() == q.to_bits()));
            prop_assert!(a.row(k).iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn model_text_round_trips(seed in 0u64..100_000) {
        let (model, _) = random_text_model(seed);
        let text = model.to_model_string().unwrap();
        let back = DiffModel::from_model_str(&text).unwrap();
        prop_assert_eq!(&back, &model);
        prop_assert_eq!(back.to_model_string().unwrap(), text);
    }
}

#[test]
fn psm_row_selection_uses_one_output() {
    let records = gen_toy_corpus(&ToyCorpusSpec { n: 400, ..ToyCorpusSpec::default() }).unwrap();
    let cfg = TrainConfig { epochs: 3, ..TrainConfig::default() };
    let psm = train_psm(&examples(&records), &cfg).unwrap();
    let task = train_classifier(&examples(&records), &cfg).unwrap();
    let x = task.embed(&records[0].tokens).unwrap();
    let all = VariantContext { psm: Some(&psm), ..VariantContext::default() };
    let row = VariantContext { aggregation: PsmAggregation::Row(1), ..all };
    let a = evaluate_variant(Variant::P2, &all, &task, &x).unwrap();
    let b = evaluate_variant(Variant::P2, &row, &task, &x).unwrap();
    // With two softmax outputs the rows of |J| coincide, so both choices agree.
    let diff: f64 = a.v.unwrap().entries().iter().zip(b.v.unwrap().entries()).map(|(p, q)| (p - q).abs()).sum();
    assert!(diff < 1e-12);
}
