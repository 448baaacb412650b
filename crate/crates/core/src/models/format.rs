//! Versioned text model container. Every float is stored as the 16 hex digits
//! of its IEEE-754 bit pattern so a save/load cycle is bit exact.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Activation, Dense, DiffModel, Encoder, ModelError, ModelKind, TrainSummary};
use crate::autodiff::Tensor;

const FORMAT: &str = "predsens-model";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct StoredTensor {
    shape: Vec<usize>,
    data: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct StoredDense {
    activation: Activation,
    weight: StoredTensor,
    bias: StoredTensor,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum StoredEncoder {
    Text {
        vocabulary: Vec<String>,
        embedding: StoredTensor,
        token_layer: Option<StoredDense>,
    },
    Tabular {
        features: usize,
        columns: Option<Vec<usize>>,
    },
}

#[derive(Serialize, Deserialize)]
struct StoredSummary {
    train_accuracy: String,
    validation_accuracy: Option<String>,
    per_class_accuracy: Vec<String>,
    final_loss: String,
    epochs: usize,
    constraint_violation: Option<String>,
    warnings: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct StoredModel {
    format: String,
    version: u32,
    kind: ModelKind,
    classes: usize,
    encoder: StoredEncoder,
    layers: Vec<StoredDense>,
    summary: StoredSummary,
}

fn hex_f64(v: f64) -> String {
    format!("{:016x}", v.to_bits())
}

fn parse_hex_f64(s: &str) -> Result<f64, ModelError> {
    if s.len() != 16 {
        return Err(ModelError::Format(format!("float {s:?} is not 16 hex digits")));
    }
    u64::from_str_radix(s, 16)
        .map(f64::from_bits)
        .map_err(|e| ModelError::Format(format!("float {s:?}: {e}")))
}

fn store_tensor(t: &Tensor) -> StoredTensor {
    StoredTensor { shape: t.shape().to_vec(), data: t.data().iter().map(|&v| hex_f64(v)).collect() }
}

fn load_tensor(t: StoredTensor) -> Result<Tensor, ModelError> {
    let data = t.data.iter().map(|s| parse_hex_f64(s)).collect::<Result<Vec<_>, _>>()?;
    Ok(Tensor::new(t.shape, data)?)
}

fn store_dense(d: &Dense) -> StoredDense {
    StoredDense { activation: d.activation, weight: store_tensor(&d.weight), bias: store_tensor(&d.bias) }
}

fn load_dense(d: StoredDense) -> Result<Dense, ModelError> {
    let bias = load_tensor(d.bias)?;
    Dense::new(load_tensor(d.weight)?, bias.into_data(), d.activation)
}

impl DiffModel {
    pub fn to_model_string(&self) -> Result<String, ModelError> {
        let encoder = match &self.encoder {
            Encoder::Text { vocabulary, embedding, token_layer } => {
                let mut by_row = vec![String::new(); vocabulary.len()];
                for (tok, &row) in vocabulary {
                    by_row[row] = tok.clone();
                }
                StoredEncoder::Text {
                    vocabulary: by_row,
                    embedding: store_tensor(embedding),
                    token_layer: token_layer.as_ref().map(store_dense),
                }
            }
            Encoder::Tabular { features, columns } => {
                StoredEncoder::Tabular { features: *features, columns: columns.clone() }
            }
        };
        let s = &self.summary;
        let stored = StoredModel {
            format: FORMAT.to_string(),
            version: VERSION,
            kind: self.kind,
            classes: self.classes,
            encoder,
            layers: self.layers.iter().map(store_dense).collect(),
            summary: StoredSummary {
                train_accuracy: hex_f64(s.train_accuracy),
                validation_accuracy: s.validation_accuracy.map(hex_f64),
                per_class_accuracy: s.per_class_accuracy.iter().map(|&v| hex_f64(v)).collect(),
                final_loss: hex_f64(s.final_loss),
                epochs: s.epochs,
                constraint_violation: s.constraint_violation.map(hex_f64),
                warnings: s.warnings.clone(),
            },
        };
        let mut text = serde_json::to_string_pretty(&stored)
            .map_err(|e| ModelError::Format(e.to_string()))?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_model_str(text: &str) -> Result<Self, ModelError> {
        let stored: StoredModel =
            serde_json::from_str(text).map_err(|e| ModelError::Format(e.to_string()))?;
        if stored.format != FORMAT {
            return Err(ModelError::Format(format!("unexpected format tag {:?}", stored.format)));
        }
        if stored.version != VERSION {
            return Err(ModelError::Format(format!("unsupported version {}", stored.version)));
        }
        let encoder = match stored.encoder {
            StoredEncoder::Text { vocabulary, embedding, token_layer } => {
                let mut map = BTreeMap::new();
                for (row, tok) in vocabulary.into_iter().enumerate() {
                    if map.insert(tok.clone(), row).is_some() {
                        return Err(ModelError::Format(format!("duplicate vocabulary entry {tok:?}")));
                    }
                }
                Encoder::Text {
                    vocabulary: map,
                    embedding: load_tensor(embedding)?,
                    token_layer: token_layer.map(load_dense).transpose()?,
                }
            }
            StoredEncoder::Tabular { features, columns } => Encoder::Tabular { features, columns },
        };
        let layers = stored.layers.into_iter().map(load_dense).collect::<Result<Vec<_>, _>>()?;
        let mut model = DiffModel::from_parts(stored.kind, encoder, layers)?;
        if model.classes != stored.classes {
            return Err(ModelError::Format(format!(
                "declared {} classes but output layer has {}",
                stored.classes, model.classes
            )));
        }
        let s = stored.summary;
        model.summary = TrainSummary {
            train_accuracy: parse_hex_f64(&s.train_accuracy)?,
            validation_accuracy: s.validation_accuracy.as_deref().map(parse_hex_f64).transpose()?,
            per_class_accuracy: s
                .per_class_accuracy
                .iter()
                .map(|v| parse_hex_f64(v))
                .collect::<Result<_, _>>()?,
            final_loss: parse_hex_f64(&s.final_loss)?,
            epochs: s.epochs,
            constraint_violation: s.constraint_violation.as_deref().map(parse_hex_f64).transpose()?,
            warnings: s.warnings,
        };
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hex_floats_are_bit_exact() {
        for v in [0.0, -0.0, 1.0 / 3.0, f64::MIN_POSITIVE, 1e-300, -123.456] {
            assert_eq!(parse_hex_f64(&hex_f64(v)).unwrap().to_bits(), v.to_bits());
        }
        assert!(parse_hex_f64("3ff").is_err());
        assert!(parse_hex_f64("zzzzzzzzzzzzzzzz").is_err());
    }

    #[test]
    fn rejects_wrong_tag_and_version() {
        let m = DiffModel::logistic(&[1.0, 2.0], 0.5).unwrap();
        let text = m.to_model_string().unwrap();
        assert!(DiffModel::from_model_str(&text.replace(FORMAT, "other")).is_err());
        assert!(DiffModel::from_model_str(&text.replace("\"version\": 1", "\"version\": 9")).is_err());
        assert_eq!(DiffModel::from_model_str(&text).unwrap(), m);
    }
}
