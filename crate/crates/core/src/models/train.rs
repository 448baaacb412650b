use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::{
    Activation, Architecture, Dense, DiffModel, Encoder, ExampleInput, LabeledExample, ModelError,
    ModelKind, TrainConfig, TrainSummary,
};
use crate::autodiff::{Gradients, Graph, NodeId, Tensor};

/// Trains the task classifier on `data[i].label`.
pub fn train_classifier(data: &[LabeledExample], cfg: &TrainConfig) -> Result<DiffModel, ModelError> {
    let labels: Vec<usize> = data.iter().map(|e| e.label).collect();
    fit(data, &labels, cfg, ModelKind::Task, "task")
}

/// Trains the protected-status model on `data[i].protected`, sharing the task
/// classifier's architecture.
pub fn train_psm(data: &[LabeledExample], cfg: &TrainConfig) -> Result<DiffModel, ModelError> {
    let labels = data
        .iter()
        .enumerate()
        .map(|(i, e)| e.protected.ok_or(ModelError::MissingProtectedLabel(i)))
        .collect::<Result<Vec<_>, _>>()?;
    fit(data, &labels, cfg, ModelKind::ProtectedStatus, "protected")
}

fn fit(
    data: &[LabeledExample],
    labels: &[usize],
    cfg: &TrainConfig,
    kind: ModelKind,
    what: &'static str,
) -> Result<DiffModel, ModelError> {
    cfg.validate()?;
    let classes = check_dataset(data, labels, what)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (train_idx, val_idx) = split(data.len(), cfg.validation_fraction, &mut rng);
    let mut model = init_model(data, &train_idx, classes, &cfg.architecture, kind, &mut rng)?;

    let mut order = train_idx.clone();
    let mut final_loss = 0.0;
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let mut step = StepGradients::zeros(&mut model, cfg.architecture.pretrained_embeddings.is_none());
            for &i in batch {
                epoch_loss += step.add_example(&model, &data[i].input, labels[i])?;
            }
            step.apply(&mut model, cfg.learning_rate / batch.len() as f64);
        }
        final_loss = epoch_loss / order.len() as f64;
    }

    model.summary = summarize(&model, data, labels, &train_idx, &val_idx, final_loss, cfg.epochs)?;
    Ok(model)
}

/// Checks labels and input consistency, returning the class count.
pub(crate) fn check_dataset(
    data: &[LabeledExample],
    labels: &[usize],
    what: &'static str,
) -> Result<usize, ModelError> {
    if data.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    let distinct: BTreeSet<usize> = labels.iter().copied().collect();
    if distinct.len() < 2 {
        return Err(ModelError::SingleClass(what));
    }
    let width = match &data[0].input {
        ExampleInput::Features(f) => Some(f.len()),
        ExampleInput::Tokens(_) => None,
    };
    for (index, ex) in data.iter().enumerate() {
        match (&ex.input, width) {
            (ExampleInput::Tokens(t), None) if t.is_empty() => {
                return Err(ModelError::InvalidExample { index, detail: "no tokens".into() })
            }
            (ExampleInput::Tokens(_), None) => {}
            (ExampleInput::Features(f), Some(w)) if f.len() == w => {
                if f.iter().any(|v| !v.is_finite()) {
                    return Err(ModelError::InvalidExample { index, detail: "non-finite feature".into() });
                }
            }
            _ => {
                return Err(ModelError::InvalidExample {
                    index,
                    detail: "input kind or width differs from the first example".into(),
                })
            }
        }
    }
    Ok(distinct.iter().max().copied().unwrap_or(0) + 1)
}

/// Seeded shuffle, then the last `fraction` of indices become validation.
pub(crate) fn split(n: usize, fraction: f64, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let n_val = ((n as f64) * fraction).floor() as usize;
    if n_val == 0 || n_val >= n {
        return (idx, Vec::new());
    }
    let val = idx.split_off(n - n_val);
    (idx, val)
}

/// Entry of the fixed embedding table for `token`: `dim` values in
/// `[-0.5, 0.5)` drawn from a generator keyed by `seed` and the token text.
pub fn pretrained_vector(seed: u64, token: &str, dim: usize) -> Vec<f64> {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(token.as_bytes());
    let mut rng = ChaCha8Rng::from_seed(hasher.finalize().into());
    (0..dim).map(|_| rng.random_range(-0.5..0.5)).collect()
}

fn xavier(rng: &mut ChaCha8Rng, fan_in: usize, fan_out: usize) -> Tensor {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let data = (0..fan_in * fan_out).map(|_| rng.random_range(-limit..limit)).collect();
    Tensor::from_parts(vec![fan_in, fan_out], data)
}

fn dense(rng: &mut ChaCha8Rng, fan_in: usize, fan_out: usize, act: Activation) -> Dense {
    Dense {
        weight: xavier(rng, fan_in, fan_out),
        bias: Tensor::from_parts(vec![1, fan_out], vec![0.0; fan_out]),
        activation: act,
    }
}

pub(crate) fn init_model(
    data: &[LabeledExample],
    train_idx: &[usize],
    classes: usize,
    arch: &Architecture,
    kind: ModelKind,
    rng: &mut ChaCha8Rng,
) -> Result<DiffModel, ModelError> {
    let (encoder, mut width) = match &data[0].input {
        ExampleInput::Tokens(_) => {
            let vocab: BTreeSet<&str> = train_idx
                .iter()
                .flat_map(|&i| match &data[i].input {
                    ExampleInput::Tokens(t) => t.iter().map(String::as_str).collect::<Vec<_>>(),
                    ExampleInput::Features(_) => Vec::new(),
                })
                .collect();
            let vocabulary: BTreeMap<String, usize> =
                vocab.into_iter().enumerate().map(|(r, t)| (t.to_string(), r)).collect();
            let d = arch.embedding_dim;
            let emb = match arch.pretrained_embeddings {
                Some(seed) => vocabulary.keys().flat_map(|t| pretrained_vector(seed, t, d)).collect(),
                None => (0..vocabulary.len() * d).map(|_| rng.random_range(-0.5..0.5)).collect(),
            };
            let embedding = Tensor::from_parts(vec![vocabulary.len(), d], emb);
            let token_layer = arch.token_layer.then(|| dense(rng, d, arch.hidden, arch.activation));
            let width = if arch.token_layer { arch.hidden } else { d };
            (Encoder::Text { vocabulary, embedding, token_layer }, width)
        }
        ExampleInput::Features(f) => {
            let width = arch.input_columns.as_ref().map_or(f.len(), Vec::len);
            (Encoder::Tabular { features: f.len(), columns: arch.input_columns.clone() }, width)
        }
    };
    let mut layers = Vec::new();
    let hidden_after_pool = match &encoder {
        Encoder::Text { token_layer, .. } => token_layer.is_none() && arch.hidden > 0,
        Encoder::Tabular { .. } => arch.hidden > 0,
    };
    if hidden_after_pool {
        layers.push(dense(rng, width, arch.hidden, arch.activation));
        width = arch.hidden;
    }
    layers.push(dense(rng, width, classes, Activation::Identity));
    DiffModel::from_parts(kind, encoder, layers)
}

/// Summed gradients for one minibatch.
pub(crate) struct StepGradients {
    params: Vec<Tensor>,
    embedding: Option<Tensor>,
}

impl StepGradients {
    pub(crate) fn zeros(model: &mut DiffModel, train_embedding: bool) -> Self {
        let params = model.parameters_mut().into_iter().map(|t| Tensor::zeros_like(t)).collect();
        let embedding = match &model.encoder {
            Encoder::Text { embedding, .. } if train_embedding => Some(Tensor::zeros_like(embedding)),
            _ => None,
        };
        Self { params, embedding }
    }

    /// Adds the cross-entropy gradient of one example; returns its loss.
    pub(crate) fn add_example(
        &mut self,
        model: &DiffModel,
        input: &ExampleInput,
        label: usize,
    ) -> Result<f64, ModelError> {
        let x = model.embed_example(input)?;
        let mut g = Graph::new();
        let xin = g.input(x.values().clone());
        let mut params = Vec::new();
        let logits = model.record_logits(&mut g, xin, &mut params)?;
        let logp = g.log_softmax(logits)?;
        let loss = -g.value(logp)?.data()[label];
        let mut seed = Tensor::zeros(&[1, model.classes]);
        seed.data_mut()[label] = -1.0;
        let grads = g.backward(logp, seed)?;
        self.absorb(model, &grads, &params, xin, &x)?;
        Ok(loss)
    }

    pub(crate) fn absorb(
        &mut self,
        model: &DiffModel,
        grads: &Gradients,
        params: &[NodeId],
        xin: NodeId,
        x: &super::EmbeddedInput,
    ) -> Result<(), ModelError> {
        for (acc, &p) in self.params.iter_mut().zip(params) {
            acc.accumulate(&grads.wrt(p)?);
        }
        if let (Some(acc), Encoder::Text { vocabulary, .. }) = (&mut self.embedding, &model.encoder) {
            let gx = grads.wrt(xin)?;
            let d = gx.cols();
            for (t, tok) in x.tokens().iter().enumerate() {
                if let Some(&row) = vocabulary.get(tok) {
                    let dst = &mut acc.data_mut()[row * d..(row + 1) * d];
                    for (a, b) in dst.iter_mut().zip(gx.row(t)) {
                        *a += b;
                    }
                }
            }
        }
        Ok(())
    }

    pub(crate) fn apply(self, model: &mut DiffModel, step: f64) {
        for (param, grad) in model.parameters_mut().into_iter().zip(&self.params) {
            for (p, g) in param.data_mut().iter_mut().zip(grad.data()) {
                *p -= step * g;
            }
        }
        if let (Some(grad), Encoder::Text { embedding, .. }) = (self.embedding, &mut model.encoder) {
            for (p, g) in embedding.data_mut().iter_mut().zip(grad.data()) {
                *p -= step * g;
            }
        }
    }
}

fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn summarize(
    model: &DiffModel,
    data: &[LabeledExample],
    labels: &[usize],
    train_idx: &[usize],
    val_idx: &[usize],
    final_loss: f64,
    epochs: usize,
) -> Result<TrainSummary, ModelError> {
    let k = model.classes;
    let predicted = data
        .iter()
        .map(|e| Ok(argmax(&model.predict(&model.embed_example(&e.input)?)?)))
        .collect::<Result<Vec<_>, ModelError>>()?;
    let accuracy = |idx: &[usize]| {
        idx.iter().filter(|&&i| predicted[i] == labels[i]).count() as f64 / idx.len() as f64
    };
    let covers_all = |idx: &[usize]| {
        let seen: BTreeSet<usize> = idx.iter().map(|&i| labels[i]).collect();
        (0..k).all(|c| seen.contains(&c))
    };
    let all: Vec<usize> = (0..data.len()).collect();
    let eval: &[usize] = if !val_idx.is_empty() && covers_all(val_idx) { val_idx } else { &all };
    let per_class_accuracy = (0..k)
        .map(|c| {
            let members: Vec<usize> = eval.iter().copied().filter(|&i| labels[i] == c).collect();
            if members.is_empty() {
                0.0
            } else {
                accuracy(&members)
            }
        })
        .collect();
    Ok(TrainSummary {
        train_accuracy: accuracy(train_idx),
        validation_accuracy: (!val_idx.is_empty()).then(|| accuracy(val_idx)),
        per_class_accuracy,
        final_loss,
        epochs,
        constraint_violation: None,
        warnings: Vec::new(),
    })
}
