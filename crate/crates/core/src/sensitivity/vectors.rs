use super::{Lexicon, PsmAggregation, SensitivityError};
use crate::autodiff::abs_jacobian;
use crate::models::{DiffModel, EmbeddedInput};

const SUM_TOLERANCE: f64 = 1e-9;

/// Non-negative weights summing to one. Holds both `w` (per class) and `v`
/// (per flattened feature).
#[derive(Clone, Debug, PartialEq)]
pub struct StochasticVector(Vec<f64>);

impl StochasticVector {
    pub fn new(entries: Vec<f64>) -> Result<Self, SensitivityError> {
        if entries.is_empty() {
            return Err(SensitivityError::EmptyVector);
        }
        if let Some(bad) = entries.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(SensitivityError::NotStochastic(format!("entry {bad} is negative or non-finite")));
        }
        let total: f64 = entries.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(SensitivityError::NotStochastic(format!("entries sum to {total}")));
        }
        Ok(Self(entries))
    }

    /// Divides non-negative raw weights by their total.
    pub fn normalized(raw: Vec<f64>, what: &'static str) -> Result<Self, SensitivityError> {
        if raw.is_empty() {
            return Err(SensitivityError::EmptyVector);
        }
        if raw.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(SensitivityError::NotStochastic("raw weights must be finite and non-negative".into()));
        }
        let total: f64 = raw.iter().sum();
        if total <= 0.0 {
            return Err(SensitivityError::DegenerateVector(what));
        }
        Ok(Self(raw.into_iter().map(|v| v / total).collect()))
    }

    pub fn uniform(n: usize) -> Result<Self, SensitivityError> {
        if n == 0 {
            return Err(SensitivityError::EmptyVector);
        }
        Ok(Self(vec![1.0 / n as f64; n]))
    }

    pub fn one_hot(n: usize, index: usize) -> Result<Self, SensitivityError> {
        if index >= n {
            return Err(SensitivityError::Dimension { what: "one-hot index", expected: n, got: index });
        }
        let mut v = vec![0.0; n];
        v[index] = 1.0;
        Ok(Self(v))
    }

    pub fn entries(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Sums each consecutive block of `dim` entries (one block per token).
    pub fn per_token(&self, dim: usize) -> Vec<f64> {
        self.0.chunks(dim.max(1)).map(|c| c.iter().sum()).collect()
    }
}

/// `w` with every class weighted `1/K`.
pub fn build_w_uniform(classes: usize) -> Result<StochasticVector, SensitivityError> {
    StochasticVector::uniform(classes)
}

/// `v` with every one of the `N * D` features weighted `1/(DN)`.
pub fn build_v_uniform(tokens: usize, dim: usize) -> Result<StochasticVector, SensitivityError> {
    StochasticVector::uniform(tokens * dim)
}

/// `v` spread evenly over the `D` slots of each lexicon token: `1/(N_g * D)`.
pub fn build_v_lexicon<S: AsRef<str>>(
    tokens: &[S],
    lexicon: &Lexicon,
    dim: usize,
) -> Result<StochasticVector, SensitivityError> {
    if tokens.is_empty() || dim == 0 {
        return Err(SensitivityError::EmptyVector);
    }
    let hits: Vec<bool> = tokens.iter().map(|t| lexicon.contains(t.as_ref())).collect();
    let matched = hits.iter().filter(|h| **h).count();
    if matched == 0 {
        return Err(SensitivityError::NoGenderedTokens);
    }
    let weight = 1.0 / (matched * dim) as f64;
    let entries = hits
        .iter()
        .flat_map(|&h| std::iter::repeat_n(if h { weight } else { 0.0 }, dim))
        .collect();
    Ok(StochasticVector(entries))
}

/// `v` from the protected-status model's input sensitivities.
///
/// The PSM is differentiated at the audited `x` itself, so both models must
/// share one embedding space: every token the PSM knows must embed exactly as
/// in `x`. Its absolute Jacobian is summed over the selected output rows, then
/// normalized.
pub fn build_v_psm(
    psm: &DiffModel,
    x: &EmbeddedInput,
    aggregation: PsmAggregation,
) -> Result<StochasticVector, SensitivityError> {
    if psm.is_text() {
        let own = psm.embed(x.tokens())?;
        if own.dim() != x.dim() {
            return Err(SensitivityError::Dimension { what: "PSM embedding width", expected: x.dim(), got: own.dim() });
        }
        for t in 0..x.n_tokens() {
            if !own.unknown()[t] && !x.unknown()[t] && own.values().row(t) != x.values().row(t) {
                return Err(SensitivityError::EmbeddingMismatch(x.tokens()[t].clone()));
            }
        }
    }
    let jg = abs_jacobian(psm, x.values())?;
    let raw = match aggregation {
        PsmAggregation::AllRows => jg.weighted_rows(&vec![1.0; jg.classes()]),
        PsmAggregation::Row(m) => {
            if m >= jg.classes() {
                return Err(SensitivityError::Dimension {
                    what: "protected class index",
                    expected: jg.classes(),
                    got: m,
                });
            }
            jg.row(m).to_vec()
        }
    };
    StochasticVector::normalized(raw, "PSM sensitivities are all zero")
}

/// Multiplies `v` entrywise by `|x_i|` and renormalizes.
pub fn apply_embedding_weights(
    v: &StochasticVector,
    x: &EmbeddedInput,
) -> Result<StochasticVector, SensitivityError> {
    if v.len() != x.len() {
        return Err(SensitivityError::Dimension { what: "v length", expected: x.len(), got: v.len() });
    }
    let raw = v.0.iter().zip(x.values().data()).map(|(vi, xi)| vi * xi.abs()).collect();
    StochasticVector::normalized(raw, "embedding-weighted v is all zero")
}

/// `P = wᵀJv`.
pub fn accumulated_sensitivity(
    w: &StochasticVector,
    j: &crate::autodiff::AbsJacobian,
    v: &StochasticVector,
) -> Result<f64, SensitivityError> {
    if w.len() != j.classes() {
        return Err(SensitivityError::Dimension { what: "w length", expected: j.classes(), got: w.len() });
    }
    if v.len() != j.features() {
        return Err(SensitivityError::Dimension { what: "v length", expected: j.features(), got: v.len() });
    }
    Ok(j.weighted_rows(w.entries()).iter().zip(v.entries()).map(|(a, b)| a * b).sum())
}
