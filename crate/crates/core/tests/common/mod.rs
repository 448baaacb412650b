//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use std::collections::BTreeMap;

use predsens::autodiff::{Differentiable, Graph, Tensor};
use predsens::models::{Activation, Dense, DiffModel, Encoder, ModelKind};
use predsens::sensitivity::{Lexicon, PsmAggregation, SubstitutionMap, VariantContext};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FD_EPS: f64 = 1e-5;

/// Forward pass only: the model's class probabilities at raw input values.
pub fn forward(model: &DiffModel, x: &Tensor) -> Vec<f64> {
    let mut g = Graph::new();
    let xin = g.input(x.clone());
    let out = model.record_forward(&mut g, xin).unwrap();
    g.value(out).unwrap().data().to_vec()
}

/// `|∂f_k/∂x_i|` by central differences, row-major `K × len(x)`.
pub fn fd_abs_jacobian(model: &DiffModel, x: &Tensor) -> Vec<Vec<f64>> {
    let k = model.output_dim();
    let mut rows = vec![vec![0.0; x.len()]; k];
    for i in 0..x.len() {
        let mut plus = x.clone();
        plus.data_mut()[i] += FD_EPS;
        let mut minus = x.clone();
        minus.data_mut()[i] -= FD_EPS;
        let (fp, fm) = (forward(model, &plus), forward(model, &minus));
        for c in 0..k {
            rows[c][i] = ((fp[c] - fm[c]) / (2.0 * FD_EPS)).abs();
        }
    }
    rows
}

/// Relative error with a floor on the denominator so entries that are zero in
/// both (dead units) compare as equal.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-7)
}

fn random_dense(rng: &mut ChaCha8Rng, inputs: usize, outputs: usize, activation: Activation) -> Dense {
    let w = (0..inputs * outputs).map(|_| rng.random_range(-1.0..1.0)).collect();
    let b = (0..outputs).map(|_| rng.random_range(-0.5..0.5)).collect();
    Dense::new(Tensor::matrix(inputs, outputs, w).unwrap(), b, activation).unwrap()
}

pub fn random_activation(rng: &mut ChaCha8Rng) -> Activation {
    [Activation::Identity, Activation::Sigmoid, Activation::Tanh, Activation::Relu, Activation::SquaredRelu]
        [rng.random_range(0..5)]
}

/// Random token layer (optional) and dense stack ending in `classes` logits.
/// At most 3 dense layers in total.
fn random_layers(rng: &mut ChaCha8Rng, d: usize, classes: usize) -> (Option<Dense>, Vec<Dense>) {
    let layers_total = rng.random_range(1..=3);
    let use_token_layer = layers_total > 1 && rng.random_bool(0.5);
    let mut width = d;
    let token_layer = use_token_layer.then(|| {
        let h = rng.random_range(1..=6);
        let act = random_activation(rng);
        width = h;
        random_dense(rng, d, h, act)
    });
    let remaining = layers_total - usize::from(use_token_layer);
    let mut layers = Vec::new();
    for l in 0..remaining {
        let last = l + 1 == remaining;
        let out = if last { classes } else { rng.random_range(1..=6) };
        let act = if last { Activation::Identity } else { random_activation(rng) };
        layers.push(random_dense(rng, width, out, act));
        width = out;
    }
    (token_layer, layers)
}

fn text_model(vocabulary: &BTreeMap<String, usize>, embedding: &Tensor, parts: (Option<Dense>, Vec<Dense>)) -> DiffModel {
    let encoder = Encoder::Text { vocabulary: vocabulary.clone(), embedding: embedding.clone(), token_layer: parts.0 };
    DiffModel::from_parts(ModelKind::Handmade, encoder, parts.1).unwrap()
}

fn random_embedding(rng: &mut ChaCha8Rng, rows: usize, d: usize) -> Tensor {
    Tensor::matrix(rows, d, (0..rows * d).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

/// A random text model with at most 3 dense layers and an input of at most
/// 6 tokens by 8 dimensions, plus that input.
pub fn random_text_model(seed: u64) -> (DiffModel, Tensor) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = rng.random_range(1..=8);
    let n = rng.random_range(1..=6);
    let vocab = 10;
    let vocabulary: BTreeMap<String, usize> = (0..vocab).map(|i| (format!("t{i}"), i)).collect();
    let embedding = random_embedding(&mut rng, vocab, d);
    let classes = rng.random_range(2..=4);
    let parts = random_layers(&mut rng, d, classes);
    let model = text_model(&vocabulary, &embedding, parts);
    (model, random_embedding(&mut rng, n, d))
}

pub const GENDERED: [&str; 6] = ["he", "she", "him", "her", "man", "woman"];
pub const NEUTRAL: [&str; 6] = ["the", "nurse", "code", "ran", "blue", "desk"];

/// A task model and a two-class PSM over one shared embedding table, a token
/// sequence drawn from gendered and neutral words (occasionally out of
/// vocabulary), and the matching lexicon and swap map.
pub struct AuditFixture {
    pub task: DiffModel,
    pub psm: DiffModel,
    pub tokens: Vec<String>,
    pub lexicon: Lexicon,
    pub substitutions: SubstitutionMap,
}

pub fn audit_fixture(seed: u64) -> AuditFixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = rng.random_range(1..=8);
    let words: Vec<&str> = GENDERED.iter().chain(&NEUTRAL).copied().collect();
    let vocabulary: BTreeMap<String, usize> = words.iter().enumerate().map(|(i, w)| (w.to_string(), i)).collect();
    let embedding = random_embedding(&mut rng, words.len(), d);
    let classes = rng.random_range(2..=4);
    let task_parts = random_layers(&mut rng, d, classes);
    let psm_parts = random_layers(&mut rng, d, 2);
    let n = rng.random_range(1..=6);
    let tokens = (0..n)
        .map(|_| {
            if rng.random_bool(0.05) {
                "unseen".to_string()
            } else {
                words[rng.random_range(0..words.len())].to_string()
            }
        })
        .collect();
    AuditFixture {
        task: text_model(&vocabulary, &embedding, task_parts),
        psm: text_model(&vocabulary, &embedding, psm_parts),
        tokens,
        lexicon: Lexicon::from_tokens(GENDERED),
        substitutions: SubstitutionMap::from_pairs([("he", "she"), ("him", "her"), ("man", "woman")]).unwrap(),
    }
}

impl AuditFixture {
    pub fn context(&self) -> VariantContext<'_> {
        VariantContext {
            psm: Some(&self.psm),
            lexicon: Some(&self.lexicon),
            substitutions: Some(&self.substitutions),
            aggregation: PsmAggregation::AllRows,
        }
    }
}

/// Pearson correlation of `scores` against labels coded 1/0, two-pass.
pub fn pearson_oracle(labels: &[bool], scores: &[f64]) -> f64 {
    let n = labels.len() as f64;
    let y: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { 0.0 }).collect();
    let my = y.iter().sum::<f64>() / n;
    let mx = scores.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in scores.iter().zip(&y) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Equal-frequency binning by rank: sorted position `r` of `n` lands in bin
/// `floor(r * bins / n)`, and tied values take the bin of their first position.
pub fn rank_bins(scores: &[f64], bins: usize) -> Vec<usize> {
    let n = scores.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut out = vec![0; n];
    let mut r = 0;
    while r < n {
        let mut end = r;
        while end + 1 < n && scores[order[end + 1]] == scores[order[r]] {
            end += 1;
        }
        let bin = r * bins / n;
        for &i in &order[r..=end] {
            out[i] = bin;
        }
        r = end + 1;
    }
    out
}

/// Plug-in mutual information in nats by summing over the full joint table.
pub fn mi_oracle(labels: &[bool], bin_of: &[usize], bins: usize) -> f64 {
    let n = labels.len() as f64;
    let mut joint = vec![[0.0f64; 2]; bins];
    for (&l, &b) in labels.iter().zip(bin_of) {
        joint[b][usize::from(l)] += 1.0;
    }
    let py: Vec<f64> = (0..2).map(|y| joint.iter().map(|row| row[y]).sum::<f64>() / n).collect();
    let mut mi = 0.0;
    for row in &joint {
        let pb = (row[0] + row[1]) / n;
        for y in 0..2 {
            let p = row[y] / n;
            if p > 0.0 {
                mi += p * (p / (pb * py[y])).ln();
            }
        }
    }
    mi
}
