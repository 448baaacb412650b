//! Compares the tape's absolute Jacobian with central finite differences on a
//! small text model.
//!
//! cargo run --example gradient_check

use std::collections::BTreeMap;

use predsens::autodiff::{abs_jacobian, Differentiable, Graph, Tensor};
use predsens::models::{Activation, Dense, DiffModel, Encoder, ModelKind};

fn probabilities(model: &DiffModel, x: &Tensor) -> Vec<f64> {
    let mut g = Graph::new();
    let input = g.input(x.clone());
    let out = model.record_forward(&mut g, input).unwrap();
    g.value(out).unwrap().data().to_vec()
}

fn main() {
    let vocabulary: BTreeMap<String, usize> =
        ["the", "nurse", "said", "she"].iter().enumerate().map(|(i, t)| (t.to_string(), i)).collect();
    let embedding = Tensor::matrix(4, 3, vec![
        0.2, -0.1, 0.4, 0.7, 0.3, -0.5, -0.2, 0.1, 0.0, 0.9, -0.8, 0.3,
    ])
    .unwrap();
    let token_layer = Dense::new(
        Tensor::matrix(3, 2, vec![0.5, -0.3, 0.8, 0.1, -0.4, 0.9]).unwrap(),
        vec![0.1, 0.2],
        Activation::SquaredRelu,
    )
    .unwrap();
    let output = Dense::new(
        Tensor::matrix(2, 3, vec![1.5, -0.7, 0.2, -1.1, 0.4, 0.9]).unwrap(),
        vec![0.0, 0.1, -0.1],
        Activation::Identity,
    )
    .unwrap();
    let model = DiffModel::from_parts(
        ModelKind::Handmade,
        Encoder::Text { vocabulary, embedding, token_layer: Some(token_layer) },
        vec![output],
    )
    .unwrap();

    let x = model.embed(&["the", "nurse", "said", "she"]).unwrap();
    let j = abs_jacobian(&model, x.values()).unwrap();
    let eps = 1e-5;
    let mut worst = 0.0f64;
    for i in 0..x.len() {
        let (mut plus, mut minus) = (x.values().clone(), x.values().clone());
        plus.data_mut()[i] += eps;
        minus.data_mut()[i] -= eps;
        let (fp, fm) = (probabilities(&model, &plus), probabilities(&model, &minus));
        for k in 0..j.classes() {
            let fd = ((fp[k] - fm[k]) / (2.0 * eps)).abs();
            let err = (j.get(k, i) - fd).abs() / j.get(k, i).max(fd).max(1e-7);
            worst = worst.max(err);
        }
    }
    println!("{} classes x {} features", j.classes(), j.features());
    for k in 0..j.classes() {
        let row: Vec<String> = j.row(k).iter().map(|v| format!("{v:.4}")).collect();
        println!("|df{k}/dx| = [{}]", row.join(", "));
    }
    println!("max relative error against finite differences: {worst:.2e}");
}
