use serde::{Deserialize, Serialize};

use super::ModelError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Sigmoid,
    Tanh,
    Relu,
    /// `max(0, z)^2`; its slope grows with the activation.
    SquaredRelu,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Sgd,
}

impl std::str::FromStr for Optimizer {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sgd" => Ok(Optimizer::Sgd),
            other => Err(ModelError::Config(format!("unknown optimizer {other:?}"))),
        }
    }
}

/// Lp norm used for both the output and the input distance in the Lipschitz constraint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormOrder {
    L1,
    L2,
}

impl NormOrder {
    pub fn from_order(p: u32) -> Result<Self, ModelError> {
        match p {
            1 => Ok(NormOrder::L1),
            2 => Ok(NormOrder::L2),
            _ => Err(ModelError::Config(format!("norm order must be 1 or 2, got {p}"))),
        }
    }

    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        let diffs = a.iter().zip(b).map(|(x, y)| x - y);
        match self {
            NormOrder::L1 => diffs.map(f64::abs).sum(),
            NormOrder::L2 => diffs.map(|d| d * d).sum::<f64>().sqrt(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzBound {
    pub bound: f64,
    pub norm: NormOrder,
}

/// Shape of the network `train_classifier` builds.
///
/// Text models embed each token, apply `token_layer` per token when set, mean-pool
/// over tokens, then apply an optional hidden layer and the output layer.
/// Tabular models skip the embedding and pooling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Architecture {
    pub embedding_dim: usize,
    pub hidden: usize,
    pub activation: Activation,
    pub token_layer: bool,
    /// Seed of a fixed token-to-vector table. Every model built with the same
    /// seed and width sees identical embeddings, and the table is not trained.
    /// `None` learns embeddings from a random start.
    pub pretrained_embeddings: Option<u64>,
    /// Tabular only: restrict the network to these input columns.
    pub input_columns: Option<Vec<usize>>,
}

impl Default for Architecture {
    fn default() -> Self {
        Self {
            embedding_dim: 16,
            hidden: 16,
            activation: Activation::SquaredRelu,
            token_layer: true,
            pretrained_embeddings: Some(0),
            input_columns: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub optimizer: Optimizer,
    pub lipschitz: Option<LipschitzBound>,
    pub architecture: Architecture,
    /// Fraction of examples held out for validation accuracy.
    pub validation_fraction: f64,
    /// Weight of the squared constraint-violation penalty in `train_lipschitz`.
    pub penalty_weight: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 15,
            learning_rate: 0.2,
            batch_size: 16,
            seed: 0,
            optimizer: Optimizer::Sgd,
            lipschitz: None,
            architecture: Architecture::default(),
            validation_fraction: 0.2,
            penalty_weight: 10.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::Config(msg));
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad(format!("learning rate must be positive, got {}", self.learning_rate));
        }
        if self.batch_size == 0 {
            return bad("batch size must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return bad(format!(
                "validation fraction must be in [0, 1), got {}",
                self.validation_fraction
            ));
        }
        if let Some(l) = &self.lipschitz {
            if !(l.bound.is_finite() && l.bound > 0.0) {
                return bad(format!("Lipschitz bound must be positive, got {}", l.bound));
            }
        }
        if !(self.penalty_weight.is_finite() && self.penalty_weight >= 0.0) {
            return bad("penalty weight must be non-negative".into());
        }
        if self.architecture.embedding_dim == 0 {
            return bad("embedding dimension must be at least 1".into());
        }
        if self.architecture.token_layer && self.architecture.hidden == 0 {
            return bad("a token layer needs a non-zero hidden width".into());
        }
        Ok(())
    }
}
