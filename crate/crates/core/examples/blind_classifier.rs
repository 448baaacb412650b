//! A classifier that never reads the protected column has exactly zero
//! sensitivity to it, while a proxy-reading one does not.
//!
//! cargo run --example blind_classifier

use predsens::autodiff::{abs_jacobian, Tensor};
use predsens::models::{Activation, Dense, DiffModel, EmbeddedInput, Encoder, ModelKind};
use predsens::sensitivity::{accumulated_sensitivity, build_w_uniform, StochasticVector};

fn classifier(columns: Vec<usize>) -> DiffModel {
    let width = columns.len();
    let hidden = Dense::new(
        Tensor::matrix(width, 3, (0..width * 3).map(|i| 0.3 * i as f64 - 0.4).collect()).unwrap(),
        vec![0.1, -0.2, 0.05],
        Activation::Tanh,
    )
    .unwrap();
    let out = Dense::new(Tensor::matrix(3, 2, vec![1.0, -1.0, 0.5, 0.2, -0.7, 0.4]).unwrap(), vec![0.0, 0.0], Activation::Identity)
        .unwrap();
    DiffModel::from_parts(ModelKind::Handmade, Encoder::Tabular { features: 3, columns: Some(columns) }, vec![hidden, out])
        .unwrap()
}

fn main() {
    // Features: [education, hair length, gender]; v puts all mass on gender.
    let v = StochasticVector::one_hot(3, 2).unwrap();
    let w = build_w_uniform(2).unwrap();
    let x = EmbeddedInput::features(&[6.0, 9.5, 1.0]);
    for (name, columns) in [("reads education and hair", vec![0, 1]), ("reads all three", vec![0, 1, 2])] {
        let model = classifier(columns);
        let j = abs_jacobian(&model, x.values()).unwrap();
        let p = accumulated_sensitivity(&w, &j, &v).unwrap();
        println!("{name:<26} P = {p:.3e}");
    }
}
