use super::{SensitivityError, SubstitutionMap};
use crate::models::DiffModel;

#[derive(Clone, Debug, PartialEq)]
pub struct CounterfactualScore {
    /// `Σ_k |f_k(x) - f_k(x̂)|`.
    pub value: f64,
    pub substitutions: usize,
}

impl CounterfactualScore {
    pub fn no_substitutable_tokens(&self) -> bool {
        self.substitutions == 0
    }
}

/// L1 distance between the predictions for `tokens` and for their
/// counterfactual with every mapped token swapped.
pub fn counterfactual_score<S: AsRef<str>>(
    model: &DiffModel,
    tokens: &[S],
    substitutions: &SubstitutionMap,
) -> Result<CounterfactualScore, SensitivityError> {
    let (swapped, count) = substitutions.apply(tokens);
    if count == 0 {
        return Ok(CounterfactualScore { value: 0.0, substitutions: 0 });
    }
    let original = model.predict_tokens(tokens)?;
    let counterfactual = model.predict_tokens(&swapped)?;
    let value = original.iter().zip(&counterfactual).map(|(a, b)| (a - b).abs()).sum();
    Ok(CounterfactualScore { value, substitutions: count })
}
