use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Activation, EmbeddedInput, ExampleInput, ModelError};
use crate::autodiff::{AutodiffError, Differentiable, Graph, NodeId, Tensor};

/// Fully connected layer `act(x * weight + bias)`, `weight` is `in x out`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub weight: Tensor,
    pub bias: Tensor,
    pub activation: Activation,
}

impl Dense {
    pub fn new(weight: Tensor, bias: Vec<f64>, activation: Activation) -> Result<Self, ModelError> {
        if weight.shape().len() != 2 || weight.cols() != bias.len() {
            return Err(ModelError::Format(format!(
                "dense layer weight {:?} does not match bias of length {}",
                weight.shape(),
                bias.len()
            )));
        }
        let bias = Tensor::new(vec![1, bias.len()], bias)?;
        Ok(Self { weight, bias, activation })
    }

    pub fn inputs(&self) -> usize {
        self.weight.rows()
    }

    pub fn outputs(&self) -> usize {
        self.weight.cols()
    }

    fn record(&self, g: &mut Graph, x: NodeId, params: &mut Vec<NodeId>) -> Result<NodeId, AutodiffError> {
        let w = g.input(self.weight.clone());
        let b = g.input(self.bias.clone());
        params.push(w);
        params.push(b);
        let z = g.matmul(x, w)?;
        let z = g.add(z, b)?;
        match self.activation {
            Activation::Identity => Ok(z),
            Activation::Sigmoid => g.sigmoid(z),
            Activation::Tanh => g.tanh(z),
            Activation::Relu => g.relu(z),
            Activation::SquaredRelu => {
                let r = g.relu(z)?;
                g.mul(r, r)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Encoder {
    /// Token embeddings, optionally transformed per token, then mean-pooled.
    Text {
        vocabulary: BTreeMap<String, usize>,
        embedding: Tensor,
        token_layer: Option<Dense>,
    },
    /// Raw feature row, optionally restricted to a subset of columns.
    Tabular { features: usize, columns: Option<Vec<usize>> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Task,
    ProtectedStatus,
    Lipschitz,
    Handmade,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub train_accuracy: f64,
    pub validation_accuracy: Option<f64>,
    /// Accuracy per class on the validation split (train split when none).
    pub per_class_accuracy: Vec<f64>,
    pub final_loss: f64,
    pub epochs: usize,
    /// Largest Lipschitz constraint violation found after training.
    pub constraint_violation: Option<f64>,
    pub warnings: Vec<String>,
}

/// A trained differentiable classifier with a softmax output of arity `K`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffModel {
    pub(crate) kind: ModelKind,
    pub(crate) encoder: Encoder,
    pub(crate) layers: Vec<Dense>,
    pub(crate) classes: usize,
    pub(crate) summary: TrainSummary,
}

impl DiffModel {
    /// Assembles a model from explicit parts. The last layer must emit `classes` logits.
    pub fn from_parts(kind: ModelKind, encoder: Encoder, layers: Vec<Dense>) -> Result<Self, ModelError> {
        let classes = layers
            .last()
            .map(Dense::outputs)
            .ok_or_else(|| ModelError::Format("model needs at least one layer".into()))?;
        let mut width = match &encoder {
            Encoder::Text { vocabulary, embedding, token_layer } => {
                if embedding.rows() != vocabulary.len() {
                    return Err(ModelError::Format(format!(
                        "embedding has {} rows for {} vocabulary entries",
                        embedding.rows(),
                        vocabulary.len()
                    )));
                }
                if vocabulary.values().any(|&r| r >= embedding.rows()) {
                    return Err(ModelError::Format("vocabulary row out of range".into()));
                }
                match token_layer {
                    Some(t) if t.inputs() != embedding.cols() => {
                        return Err(ModelError::Format("token layer width mismatch".into()))
                    }
                    Some(t) => t.outputs(),
                    None => embedding.cols(),
                }
            }
            Encoder::Tabular { features, columns } => match columns {
                Some(cols) => {
                    if cols.iter().any(|&c| c >= *features) {
                        return Err(ModelError::Format("input column out of range".into()));
                    }
                    cols.len()
                }
                None => *features,
            },
        };
        for layer in &layers {
            if layer.inputs() != width {
                return Err(ModelError::Format(format!(
                    "layer expects {} inputs but receives {}",
                    layer.inputs(),
                    width
                )));
            }
            width = layer.outputs();
        }
        Ok(Self { kind, encoder, layers, classes, summary: TrainSummary::default() })
    }

    /// Two-class logistic model whose output is `[σ(w·x + b), 1 − σ(w·x + b)]`.
    pub fn logistic(weights: &[f64], bias: f64) -> Result<Self, ModelError> {
        let m = weights.len();
        let mut w = Vec::with_capacity(2 * m);
        for &wi in weights {
            w.push(wi);
            w.push(0.0);
        }
        let layer = Dense::new(Tensor::matrix(m, 2, w)?, vec![bias, 0.0], Activation::Identity)?;
        Self::from_parts(
            ModelKind::Handmade,
            Encoder::Tabular { features: m, columns: None },
            vec![layer],
        )
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn encoder(&self) -> &Encoder {
        &self.encoder
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn summary(&self) -> &TrainSummary {
        &self.summary
    }

    pub fn is_text(&self) -> bool {
        matches!(self.encoder, Encoder::Text { .. })
    }

    /// Width `D` of one input row.
    pub fn input_dim(&self) -> usize {
        match &self.encoder {
            Encoder::Text { embedding, .. } => embedding.cols(),
            Encoder::Tabular { features, .. } => *features,
        }
    }

    pub fn vocabulary(&self) -> Option<&BTreeMap<String, usize>> {
        match &self.encoder {
            Encoder::Text { vocabulary, .. } => Some(vocabulary),
            Encoder::Tabular { .. } => None,
        }
    }

    /// Looks up each token's embedding row. Unknown tokens get a zero row and are flagged.
    pub fn embed<S: AsRef<str>>(&self, tokens: &[S]) -> Result<EmbeddedInput, ModelError> {
        let Encoder::Text { vocabulary, embedding, .. } = &self.encoder else {
            return Err(ModelError::InputKind { expected: "feature" });
        };
        if tokens.is_empty() {
            return Err(ModelError::InvalidExample { index: 0, detail: "no tokens".into() });
        }
        let d = embedding.cols();
        let mut data = Vec::with_capacity(tokens.len() * d);
        let mut unknown = Vec::with_capacity(tokens.len());
        for t in tokens {
            match vocabulary.get(t.as_ref()) {
                Some(&row) => {
                    data.extend_from_slice(embedding.row(row));
                    unknown.push(false);
                }
                None => {
                    data.extend(std::iter::repeat_n(0.0, d));
                    unknown.push(true);
                }
            }
        }
        Ok(EmbeddedInput::new(
            tokens.iter().map(|t| t.as_ref().to_string()).collect(),
            Tensor::from_parts(vec![tokens.len(), d], data),
            unknown,
        ))
    }

    pub fn embed_features(&self, features: &[f64]) -> Result<EmbeddedInput, ModelError> {
        match &self.encoder {
            Encoder::Tabular { features: m, .. } if *m == features.len() => {
                if features.iter().any(|v| !v.is_finite()) {
                    return Err(ModelError::InvalidExample { index: 0, detail: "non-finite feature".into() });
                }
                Ok(EmbeddedInput::features(features))
            }
            Encoder::Tabular { features: m, .. } => Err(ModelError::InvalidExample {
                index: 0,
                detail: format!("expected {} features, got {}", m, features.len()),
            }),
            Encoder::Text { .. } => Err(ModelError::InputKind { expected: "token" }),
        }
    }

    pub fn embed_example(&self, input: &ExampleInput) -> Result<EmbeddedInput, ModelError> {
        match input {
            ExampleInput::Tokens(t) => self.embed(t),
            ExampleInput::Features(f) => self.embed_features(f),
        }
    }

    /// Class probabilities for an embedded input.
    pub fn predict(&self, x: &EmbeddedInput) -> Result<Vec<f64>, ModelError> {
        self.predict_values(x.values())
    }

    pub(crate) fn predict_values(&self, x: &Tensor) -> Result<Vec<f64>, ModelError> {
        let mut g = Graph::new();
        let input = g.input(x.clone());
        let out = self.record_forward(&mut g, input)?;
        Ok(g.value(out)?.data().to_vec())
    }

    pub fn predict_tokens<S: AsRef<str>>(&self, tokens: &[S]) -> Result<Vec<f64>, ModelError> {
        self.predict(&self.embed(tokens)?)
    }

    /// Records the network up to the logits, pushing every parameter leaf into `params`
    /// in [`DiffModel::parameters_mut`] order.
    pub(crate) fn record_logits(
        &self,
        g: &mut Graph,
        x: NodeId,
        params: &mut Vec<NodeId>,
    ) -> Result<NodeId, AutodiffError> {
        let dim = self.input_dim();
        let xv = g.value(x)?;
        if xv.cols() != dim {
            return Err(AutodiffError::Shape {
                op: "model_input",
                detail: format!("expected rows of width {}, got {:?}", dim, xv.shape()),
            });
        }
        let mut h = match &self.encoder {
            Encoder::Text { token_layer, .. } => {
                let per_token = match token_layer {
                    Some(layer) => layer.record(g, x, params)?,
                    None => x,
                };
                g.mean_rows(per_token)?
            }
            Encoder::Tabular { columns, .. } => {
                if xv.rows() != 1 {
                    return Err(AutodiffError::Shape {
                        op: "model_input",
                        detail: format!("tabular input must be one row, got {:?}", xv.shape()),
                    });
                }
                match columns {
                    Some(cols) => g.select_cols(x, cols)?,
                    None => x,
                }
            }
        };
        for layer in &self.layers {
            h = layer.record(g, h, params)?;
        }
        Ok(h)
    }

    /// Mutable parameter tensors in recording order.
    pub(crate) fn parameters_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = Vec::new();
        if let Encoder::Text { token_layer: Some(t), .. } = &mut self.encoder {
            out.push(&mut t.weight);
            out.push(&mut t.bias);
        }
        for layer in &mut self.layers {
            out.push(&mut layer.weight);
            out.push(&mut layer.bias);
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        std::fs::write(path, self.to_model_string()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        Self::from_model_str(&std::fs::read_to_string(path)?)
    }

    /// SHA-256 of the serialized model, hex encoded.
    pub fn fingerprint(&self) -> Result<String, ModelError> {
        Ok(hex::encode(Sha256::digest(self.to_model_string()?.as_bytes())))
    }
}

impl Differentiable for DiffModel {
    fn output_dim(&self) -> usize {
        self.classes
    }

    fn record_forward(&self, graph: &mut Graph, x: NodeId) -> Result<NodeId, AutodiffError> {
        let mut params = Vec::new();
        let logits = self.record_logits(graph, x, &mut params)?;
        graph.softmax(logits)
    }
}
