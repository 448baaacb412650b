//! Trains a task classifier and a protected-status model on the planted-bias
//! toy corpus, scores every record with P1-P5 and CF, correlates each variant
//! with the ground-truth bias flags, and prints heat maps for a few records.
//!
//! cargo run --release --example toy_audit

use predsens::corpus::{export_saliency, gen_toy_corpus, TextRecord, ToyCorpusSpec};
use predsens::models::{train_classifier, train_psm, LabeledExample, TrainConfig};
use predsens::sensitivity::{evaluate_variant, Lexicon, SubstitutionMap, Variant, VariantContext};
use predsens::stats::point_biserial;

fn main() {
    let records = gen_toy_corpus(&ToyCorpusSpec::default()).unwrap();
    let data: Vec<LabeledExample> = records.iter().map(TextRecord::to_example).collect();
    let cfg = TrainConfig::default();
    let task = train_classifier(&data, &cfg).unwrap();
    let psm = train_psm(&data, &cfg).unwrap();
    println!(
        "task validation accuracy {:.3}; PSM per-gender accuracy {:?}",
        task.summary().validation_accuracy.unwrap(),
        psm.summary().per_class_accuracy.iter().map(|a| (a * 1000.0).round() / 1000.0).collect::<Vec<_>>()
    );

    let lexicon = Lexicon::gendered_default();
    let substitutions = SubstitutionMap::gendered_default();
    let ctx = VariantContext {
        psm: Some(&psm),
        lexicon: Some(&lexicon),
        substitutions: Some(&substitutions),
        ..VariantContext::default()
    };

    let flags: Vec<bool> = records.iter().map(|r| r.biased == Some(true)).collect();
    println!("\nvariant  correlation with bias flags");
    for variant in Variant::ALL {
        let scores: Vec<f64> = records
            .iter()
            .map(|r| {
                let x = task.embed(&r.tokens).unwrap();
                match evaluate_variant(variant, &ctx, &task, &x) {
                    Ok(res) => res.value,
                    Err(e) if e.is_signal() => 0.0,
                    Err(e) => panic!("{e}"),
                }
            })
            .collect();
        println!("{variant:<8} {:+.3}", point_biserial(&flags, &scores).unwrap());
    }

    println!("\nP2 heat maps (wTJ and v per token, scaled to the row maximum)");
    for r in records.iter().filter(|r| r.biased == Some(true)).take(3) {
        let x = task.embed(&r.tokens).unwrap();
        let result = evaluate_variant(Variant::P2, &ctx, &task, &x).unwrap();
        println!("{} (label {}, P2 = {:.4})", r.id, r.label, result.value);
        print!("{}", export_saliency(&result, &r.tokens).unwrap().to_tsv());
    }
}
