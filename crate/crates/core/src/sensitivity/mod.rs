//! Accumulated prediction sensitivity `P = wᵀJv` and its variants.
//!
//! | variant | `v` |
//! |---------|-----|
//! | P1 | uniform `1/(DN)` |
//! | P2 | protected-status-model sensitivities |
//! | P3 | P2 times `|embedding|`, renormalized |
//! | P4 | lexicon tokens, `1/(N_g D)` |
//! | P5 | P4 times `|embedding|`, renormalized |
//! | CF | no `v`; L1 change in prediction after gender-token swaps |
//!
//! `w` is always uniform over classes.

mod counterfactual;
mod lexicon;
mod vectors;

pub use counterfactual::{counterfactual_score, CounterfactualScore};
pub use lexicon::{Lexicon, SubstitutionMap};
pub use vectors::{
    accumulated_sensitivity, apply_embedding_weights, build_v_lexicon, build_v_psm, build_v_uniform,
    build_w_uniform, StochasticVector,
};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::{abs_jacobian, AutodiffError};
use crate::models::{DiffModel, EmbeddedInput, ModelError};

#[derive(Debug, Error)]
pub enum SensitivityError {
    #[error("{what}: expected {expected}, got {got}")]
    Dimension { what: &'static str, expected: usize, got: usize },
    #[error("vector has no entries")]
    EmptyVector,
    #[error("not a stochastic vector: {0}")]
    NotStochastic(String),
    #[error("no gendered tokens in the example")]
    NoGenderedTokens,
    #[error("degenerate v: {0}")]
    DegenerateVector(&'static str),
    #[error("PSM embeds {0:?} differently from the audited model")]
    EmbeddingMismatch(String),
    #[error("variant {variant} requires {dependency}")]
    MissingDependency { variant: Variant, dependency: &'static str },
    #[error("variant {variant} needs token input")]
    NeedsTokens { variant: Variant },
    #[error("line {line}: {detail}")]
    Parse { line: usize, detail: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl SensitivityError {
    /// True for the two typed "no usable v" outcomes, which callers exclude or
    /// zero rather than treat as failures.
    pub fn is_signal(&self) -> bool {
        matches!(self, SensitivityError::NoGenderedTokens | SensitivityError::DegenerateVector(_))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    P1,
    P2,
    P3,
    P4,
    P5,
    CF,
}

impl Variant {
    pub const ALL: [Variant; 6] = [Variant::P1, Variant::P2, Variant::P3, Variant::P4, Variant::P5, Variant::CF];

    pub fn needs_psm(self) -> bool {
        matches!(self, Variant::P2 | Variant::P3)
    }

    pub fn needs_lexicon(self) -> bool {
        matches!(self, Variant::P4 | Variant::P5)
    }

    pub fn needs_substitutions(self) -> bool {
        self == Variant::CF
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Variant::P1 => "P1",
            Variant::P2 => "P2",
            Variant::P3 => "P3",
            Variant::P4 => "P4",
            Variant::P5 => "P5",
            Variant::CF => "CF",
        };
        f.write_str(s)
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "P1" => Ok(Variant::P1),
            "P2" => Ok(Variant::P2),
            "P3" => Ok(Variant::P3),
            "P4" => Ok(Variant::P4),
            "P5" => Ok(Variant::P5),
            "CF" => Ok(Variant::CF),
            other => Err(format!("unknown variant {other:?}; expected P1-P5 or CF")),
        }
    }
}

/// Which PSM output rows feed `v`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum PsmAggregation {
    /// Sum `|∂g_j/∂x_i|` over every PSM output `j`.
    #[default]
    AllRows,
    /// Use only the row of protected class `m`.
    Row(usize),
}

/// Resources a variant may depend on.
#[derive(Clone, Copy, Debug, Default)]
pub struct VariantContext<'a> {
    pub psm: Option<&'a DiffModel>,
    pub lexicon: Option<&'a Lexicon>,
    pub substitutions: Option<&'a SubstitutionMap>,
    pub aggregation: PsmAggregation,
}

impl VariantContext<'_> {
    pub fn check(&self, variant: Variant) -> Result<(), SensitivityError> {
        let missing = |dependency| Err(SensitivityError::MissingDependency { variant, dependency });
        if variant.needs_psm() && self.psm.is_none() {
            return missing("a protected-status model");
        }
        if variant.needs_lexicon() && self.lexicon.is_none() {
            return missing("a lexicon");
        }
        if variant.needs_substitutions() && self.substitutions.is_none() {
            return missing("a substitution map");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SensitivityResult {
    pub variant: Variant,
    pub value: f64,
    /// `wᵀJ`, one entry per flattened feature. Empty for CF.
    pub contributions: Vec<f64>,
    pub v: Option<StochasticVector>,
    /// `wᵀJ` summed over each token's `D` entries.
    pub token_saliency: Vec<f64>,
    /// `v` summed over each token's `D` entries.
    pub token_v: Vec<f64>,
    pub unknown_tokens: usize,
    /// CF only: number of tokens swapped.
    pub substitutions: Option<usize>,
}

fn per_token(values: &[f64], dim: usize) -> Vec<f64> {
    values.chunks(dim.max(1)).map(|c| c.iter().sum()).collect()
}

/// Evaluates one variant of the metric for `task` on `x`, with `w` uniform.
pub fn evaluate_variant(
    variant: Variant,
    ctx: &VariantContext<'_>,
    task: &DiffModel,
    x: &EmbeddedInput,
) -> Result<SensitivityResult, SensitivityError> {
    ctx.check(variant)?;
    if variant == Variant::CF {
        let subs = ctx.substitutions.expect("checked");
        if !task.is_text() {
            return Err(SensitivityError::NeedsTokens { variant });
        }
        let cf = counterfactual_score(task, x.tokens(), subs)?;
        return Ok(SensitivityResult {
            variant,
            value: cf.value,
            contributions: Vec::new(),
            v: None,
            token_saliency: Vec::new(),
            token_v: Vec::new(),
            unknown_tokens: x.unknown_count(),
            substitutions: Some(cf.substitutions),
        });
    }

    let dim = x.dim();
    let v = match variant {
        Variant::P1 => build_v_uniform(x.n_tokens(), dim)?,
        Variant::P2 => build_v_psm(ctx.psm.expect("checked"), x, ctx.aggregation)?,
        Variant::P3 => apply_embedding_weights(&build_v_psm(ctx.psm.expect("checked"), x, ctx.aggregation)?, x)?,
        Variant::P4 => build_v_lexicon(x.tokens(), ctx.lexicon.expect("checked"), dim)?,
        Variant::P5 => apply_embedding_weights(&build_v_lexicon(x.tokens(), ctx.lexicon.expect("checked"), dim)?, x)?,
        Variant::CF => unreachable!(),
    };
    let j = abs_jacobian(task, x.values())?;
    let w = build_w_uniform(j.classes())?;
    let value = accumulated_sensitivity(&w, &j, &v)?;
    let contributions = j.weighted_rows(w.entries());
    Ok(SensitivityResult {
        variant,
        value,
        token_saliency: per_token(&contributions, dim),
        token_v: v.per_token(dim),
        contributions,
        v: Some(v),
        unknown_tokens: x.unknown_count(),
        substitutions: None,
    })
}
