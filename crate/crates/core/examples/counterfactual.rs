//! The counterfactual baseline on a hand-built model: swap gendered tokens and
//! measure the L1 change in the predicted distribution.
//!
//! cargo run --example counterfactual

use predsens::autodiff::Tensor;
use predsens::models::{Activation, Dense, DiffModel, Encoder, ModelKind};
use predsens::sensitivity::{counterfactual_score, SubstitutionMap};

fn main() {
    // One embedding dimension: "he" pushes toward class 0, "she" toward class 1.
    let vocabulary = [("he", 0), ("she", 1), ("is", 2), ("an", 3), ("engineer", 4)]
        .into_iter()
        .map(|(t, i)| (t.to_string(), i))
        .collect();
    let embedding = Tensor::matrix(5, 1, vec![1.0, -1.0, 0.0, 0.0, 0.5]).unwrap();
    let out = Dense::new(Tensor::matrix(1, 2, vec![3.0, 0.0]).unwrap(), vec![0.0, 0.0], Activation::Identity).unwrap();
    let model = DiffModel::from_parts(ModelKind::Handmade, Encoder::Text { vocabulary, embedding, token_layer: None }, vec![out])
        .unwrap();
    let swaps = SubstitutionMap::gendered_default();

    for sentence in [vec!["he", "is", "an", "engineer"], vec!["she", "is", "an", "engineer"], vec!["an", "engineer"]] {
        let cf = counterfactual_score(&model, &sentence, &swaps).unwrap();
        let (swapped, _) = swaps.apply(&sentence);
        println!(
            "{:<24} -> {:<24} CF = {:.4} ({} swapped)",
            sentence.join(" "),
            swapped.join(" "),
            cf.value,
            cf.substitutions
        );
    }
}
