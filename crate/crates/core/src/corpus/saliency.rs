use super::CorpusError;
use crate::sensitivity::SensitivityResult;

/// Per-token heat-map rows: `wᵀJ` and `v`, each summed over the token's `D`
/// entries and scaled by the row maximum into `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SaliencyTable {
    pub tokens: Vec<String>,
    pub sensitivity: Vec<f64>,
    pub v: Vec<f64>,
    /// Row whose maximum was zero and was left as all zeros.
    pub sensitivity_zero: bool,
    pub v_zero: bool,
}

fn normalize(row: &[f64]) -> (Vec<f64>, bool) {
    let max = row.iter().cloned().fold(0.0, f64::max);
    if max <= 0.0 {
        return (vec![0.0; row.len()], true);
    }
    (row.iter().map(|v| v / max).collect(), false)
}

pub fn export_saliency<S: AsRef<str>>(result: &SensitivityResult, tokens: &[S]) -> Result<SaliencyTable, CorpusError> {
    if result.v.is_none() {
        return Err(CorpusError::Saliency(format!("variant {} has no per-feature weights", result.variant)));
    }
    if result.token_saliency.len() != tokens.len() || result.token_v.len() != tokens.len() {
        return Err(CorpusError::Saliency(format!(
            "{} tokens but result covers {}",
            tokens.len(),
            result.token_saliency.len()
        )));
    }
    let (sensitivity, sensitivity_zero) = normalize(&result.token_saliency);
    let (v, v_zero) = normalize(&result.token_v);
    Ok(SaliencyTable {
        tokens: tokens.iter().map(|t| t.as_ref().to_string()).collect(),
        sensitivity,
        v,
        sensitivity_zero,
        v_zero,
    })
}

impl SaliencyTable {
    /// Three tab-separated rows: tokens, `wᵀJ`, `v`.
    pub fn to_tsv(&self) -> String {
        let join = |row: &[f64]| row.iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>().join("\t");
        format!(
            "token\t{}\nwTJ\t{}\nv\t{}\n",
            self.tokens.join("\t"),
            join(&self.sensitivity),
            join(&self.v)
        )
    }

    /// Index of the token with the largest `v` mass.
    pub fn v_peak(&self) -> Option<usize> {
        (0..self.v.len()).max_by(|&a, &b| self.v[a].total_cmp(&self.v[b]))
    }
}
