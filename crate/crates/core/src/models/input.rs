use crate::autodiff::Tensor;

/// Raw input for one example.
#[derive(Clone, Debug, PartialEq)]
pub enum ExampleInput {
    Tokens(Vec<String>),
    Features(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledExample {
    pub input: ExampleInput,
    pub label: usize,
    pub protected: Option<usize>,
}

impl LabeledExample {
    pub fn text<S: AsRef<str>>(tokens: &[S], label: usize, protected: Option<usize>) -> Self {
        Self {
            input: ExampleInput::Tokens(tokens.iter().map(|t| t.as_ref().to_string()).collect()),
            label,
            protected,
        }
    }

    pub fn tabular(features: Vec<f64>, label: usize, protected: Option<usize>) -> Self {
        Self { input: ExampleInput::Features(features), label, protected }
    }
}

/// An example materialized as the `N x D` stack the metric differentiates
/// against. Tabular inputs are a single row of `D` features.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddedInput {
    tokens: Vec<String>,
    values: Tensor,
    unknown: Vec<bool>,
}

impl EmbeddedInput {
    pub(crate) fn new(tokens: Vec<String>, values: Tensor, unknown: Vec<bool>) -> Self {
        debug_assert_eq!(tokens.len(), values.rows());
        debug_assert_eq!(tokens.len(), unknown.len());
        Self { tokens, values, unknown }
    }

    /// A single-row input holding raw feature values.
    pub fn features(values: &[f64]) -> Self {
        Self {
            tokens: vec!["<features>".to_string()],
            values: Tensor::from_parts(vec![1, values.len()], values.to_vec()),
            unknown: vec![false],
        }
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn values(&self) -> &Tensor {
        &self.values
    }

    pub fn n_tokens(&self) -> usize {
        self.values.rows()
    }

    pub fn dim(&self) -> usize {
        self.values.cols()
    }

    /// Flattened feature count `N * D`.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn unknown(&self) -> &[bool] {
        &self.unknown
    }

    pub fn unknown_count(&self) -> usize {
        self.unknown.iter().filter(|u| **u).count()
    }

    /// The same stack with tokens (rows) reordered so that row `i` of the
    /// result is row `order[i]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let d = self.dim();
        let mut data = Vec::with_capacity(self.len());
        for &r in order {
            data.extend_from_slice(self.values.row(r));
        }
        Self {
            tokens: order.iter().map(|&r| self.tokens[r].clone()).collect(),
            values: Tensor::from_parts(vec![order.len(), d], data),
            unknown: order.iter().map(|&r| self.unknown[r]).collect(),
        }
    }
}
