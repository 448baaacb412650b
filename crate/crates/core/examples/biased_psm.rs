//! Retrains the protected-status model after dropping half of one protected
//! class and shows how its recall and P2's correlation with the bias flags
//! degrade.
//!
//! cargo run --release --example biased_psm

use predsens::corpus::{downsample_protected, gen_toy_corpus, TextRecord, ToyCorpusSpec};
use predsens::models::{train_classifier, train_psm, DiffModel, LabeledExample, TrainConfig};
use predsens::sensitivity::{evaluate_variant, Variant, VariantContext};
use predsens::stats::point_biserial;

fn examples(records: &[TextRecord]) -> Vec<LabeledExample> {
    records.iter().map(TextRecord::to_example).collect()
}

fn p2_correlation(task: &DiffModel, psm: &DiffModel, records: &[TextRecord]) -> f64 {
    let ctx = VariantContext { psm: Some(psm), ..VariantContext::default() };
    let flags: Vec<bool> = records.iter().map(|r| r.biased == Some(true)).collect();
    let scores: Vec<f64> = records
        .iter()
        .map(|r| {
            let x = task.embed(&r.tokens).unwrap();
            evaluate_variant(Variant::P2, &ctx, task, &x).map_or(0.0, |res| res.value)
        })
        .collect();
    point_biserial(&flags, &scores).unwrap()
}

fn main() {
    let records = gen_toy_corpus(&ToyCorpusSpec::default()).unwrap();
    let cfg = TrainConfig::default();
    let task = train_classifier(&examples(&records), &cfg).unwrap();
    let full = train_psm(&examples(&records), &cfg).unwrap();
    let thinned = downsample_protected(&records, 1, 0.5, 0).unwrap();
    let biased = train_psm(&examples(&thinned), &cfg).unwrap();

    for (name, psm, n) in [("full PSM", &full, records.len()), ("downsampled PSM", &biased, thinned.len())] {
        println!(
            "{name:<16} trained on {n:>4} records, per-class accuracy {:?}, P2 correlation {:.4}",
            psm.summary().per_class_accuracy.iter().map(|a| (a * 1000.0).round() / 1000.0).collect::<Vec<_>>(),
            p2_correlation(&task, psm, &records)
        );
    }
}
