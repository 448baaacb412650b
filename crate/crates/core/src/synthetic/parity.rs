use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::SyntheticError;
use crate::autodiff::{abs_jacobian, AbsJacobian, Tensor};
use crate::models::{Activation, Dense, DiffModel, Encoder, ModelKind};
use crate::sensitivity::{accumulated_sensitivity, StochasticVector};

/// One applicant: years of education, hair length, and a binary gender indicator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HiringRecord {
    pub education: f64,
    pub hair_length: f64,
    pub gender: u8,
}

impl HiringRecord {
    pub fn features(&self) -> [f64; 3] {
        [self.education, self.hair_length, f64::from(self.gender)]
    }
}

/// Education ~ U(0, 10), gender ~ Bernoulli(0.5), hair length ~ N(2, 10) for
/// gender 0 and N(10, 10) for gender 1 (variance 10).
pub fn gen_hiring(n: usize, seed: u64) -> Result<Vec<HiringRecord>, SyntheticError> {
    if n < 2 {
        return Err(SyntheticError::TooFewRecords(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sd = 10f64.sqrt();
    let short = Normal::new(2.0, sd).expect("valid normal");
    let long = Normal::new(10.0, sd).expect("valid normal");
    Ok((0..n)
        .map(|_| {
            let education = rng.random_range(0.0..10.0);
            let gender = u8::from(rng.random_bool(0.5));
            let hair_length = if gender == 1 { long.sample(&mut rng) } else { short.sample(&mut rng) };
            HiringRecord { education, hair_length, gender }
        })
        .collect())
}

fn check_lengths(a: &[f64], b: &[f64]) -> Result<(), SyntheticError> {
    if a.len() != b.len() {
        return Err(SyntheticError::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(SyntheticError::TooFewRecords(a.len()));
    }
    Ok(())
}

/// Mean of `(a_m - a_n) / (b_m - b_n)` over every `n != m` with `b_n != b_m`:
/// the left/right difference quotients of `a` with respect to `b` at point `m`.
pub fn diff_quotient(a: &[f64], b: &[f64], m: usize) -> Result<f64, SyntheticError> {
    check_lengths(a, b)?;
    if m >= a.len() {
        return Err(SyntheticError::IndexOutOfRange { index: m, len: a.len() });
    }
    let (mut sum, mut count) = (0.0, 0usize);
    for n in 0..a.len() {
        let db = b[m] - b[n];
        if n != m && db != 0.0 {
            sum += (a[m] - a[n]) / db;
            count += 1;
        }
    }
    if count == 0 {
        return Err(SyntheticError::UndefinedDerivative);
    }
    Ok(sum / count as f64)
}

/// How pairwise differences are combined into a partial-derivative estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DerivativeEstimator {
    /// Plain mean of the quotients `Δa/Δb`.
    MeanQuotient,
    /// `ΣΔaΔb / ΣΔb²`: the quotients weighted by `Δb²`. Identical to
    /// `MeanQuotient` when every `|Δb|` is equal (binary `b`), and stays
    /// bounded when `b` is continuous and some `Δb` are tiny.
    PairSlope,
}

/// Which points and pairs enter [`mean_partial`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PartialSampling {
    /// Cap on anchor points `m`; all points when `None`.
    pub points: Option<usize>,
    /// Cap on partners `n` per anchor; all when `None`.
    pub pairs_per_point: Option<usize>,
    pub seed: u64,
}

impl Default for PartialSampling {
    fn default() -> Self {
        Self { points: None, pairs_per_point: Some(2000), seed: 0 }
    }
}

/// Population estimate of `∂a/∂b`: pairwise differences pooled over anchor
/// points `m` and partners `n`, pairs with `b_m == b_n` excluded.
///
/// A single anchor's quotient mean is centred on `a_m` minus the partner mean,
/// not on the derivative; pooling over anchors removes that offset.
pub fn mean_partial(
    a: &[f64],
    b: &[f64],
    estimator: DerivativeEstimator,
    sampling: PartialSampling,
) -> Result<f64, SyntheticError> {
    check_lengths(a, b)?;
    let n = a.len();
    let mut rng = ChaCha8Rng::seed_from_u64(sampling.seed);
    let anchors: Vec<usize> = match sampling.points {
        Some(k) if k < n => rand::seq::index::sample(&mut rng, n, k).into_vec(),
        _ => (0..n).collect(),
    };
    let (mut per_anchor_sum, mut anchors_used) = (0.0, 0usize);
    let (mut num, mut den) = (0.0, 0.0);
    for &m in &anchors {
        let (mut sum, mut count) = (0.0, 0usize);
        let mut visit = |j: usize| {
            let db = b[m] - b[j];
            if j != m && db != 0.0 {
                let da = a[m] - a[j];
                match estimator {
                    DerivativeEstimator::MeanQuotient => {
                        sum += da / db;
                        count += 1;
                    }
                    DerivativeEstimator::PairSlope => {
                        num += da * db;
                        den += db * db;
                    }
                }
            }
        };
        match sampling.pairs_per_point {
            Some(k) if k < n => {
                for _ in 0..k {
                    visit(rng.random_range(0..n));
                }
            }
            _ => (0..n).for_each(&mut visit),
        }
        if count > 0 {
            per_anchor_sum += sum / count as f64;
            anchors_used += 1;
        }
    }
    match estimator {
        DerivativeEstimator::MeanQuotient if anchors_used > 0 => Ok(per_anchor_sum / anchors_used as f64),
        DerivativeEstimator::PairSlope if den > 0.0 => Ok(num / den),
        _ => Err(SyntheticError::UndefinedDerivative),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParityConfig {
    pub sampling: PartialSampling,
}

impl Default for ParityConfig {
    fn default() -> Self {
        Self { sampling: PartialSampling::default() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParityOutcome {
    /// `∂x2/∂x3`: hair length with respect to gender.
    pub hair_wrt_gender: f64,
    /// `∂x1/∂x3`: education with respect to gender.
    pub education_wrt_gender: f64,
    /// `∂x1/∂x2`: education with respect to hair length.
    pub education_wrt_hair: f64,
    /// Point at which both classifiers are differentiated (feature means).
    pub probe: [f64; 3],
    /// `f = σ((x1 - 5) + (x2 - 6))`, `v = [0, 0, 1]`.
    pub case1: f64,
    /// `f = σ(x1 - 5)`, `v = [0, ½, ½]`.
    pub case2: f64,
    pub case1_v: StochasticVector,
    pub case2_v: StochasticVector,
}

/// Logistic model `[σ(z), 1 - σ(z)]` with `z = Σ weights_j x_{col_j} + bias`
/// reading only `columns` of a 3-feature row.
fn hiring_classifier(columns: &[usize], weights: &[f64], bias: f64) -> Result<DiffModel, SyntheticError> {
    let mut w = Vec::with_capacity(2 * weights.len());
    for &wi in weights {
        w.extend([wi, 0.0]);
    }
    let layer = Dense::new(
        Tensor::matrix(weights.len(), 2, w)?,
        vec![bias, 0.0],
        Activation::Identity,
    )?;
    Ok(DiffModel::from_parts(
        ModelKind::Handmade,
        Encoder::Tabular { features: 3, columns: Some(columns.to_vec()) },
        vec![layer],
    )?)
}

/// Replaces column `target` of `j` with `|∂f/∂x_source| · |∂x_source/∂x_target|`.
fn chain(j: &AbsJacobian, source: usize, target: usize, partial: f64) -> Result<AbsJacobian, SyntheticError> {
    let rows = (0..j.classes())
        .map(|k| {
            let mut row = j.row(k).to_vec();
            row[target] = j.get(k, source) * partial.abs();
            row
        })
        .collect();
    Ok(AbsJacobian::from_rows(rows)?)
}

/// Both statistical-parity cases on hiring data.
///
/// Case 1's classifier reads education and hair length; gender reaches it only
/// through hair length, so its gender column comes from the chain rule with the
/// estimated `∂x2/∂x3`. Case 2 reads education only, and its hair and gender
/// columns chain through `∂x1/∂x2` and `∂x1/∂x3`. Both use `w = [½, ½]` over
/// `[f, 1 - f]` and are evaluated at the feature means, where each logit is
/// close to 0.
pub fn run_parity_cases(data: &[HiringRecord], cfg: &ParityConfig) -> Result<ParityOutcome, SyntheticError> {
    if data.len() < 2 {
        return Err(SyntheticError::TooFewRecords(data.len()));
    }
    let x1: Vec<f64> = data.iter().map(|r| r.education).collect();
    let x2: Vec<f64> = data.iter().map(|r| r.hair_length).collect();
    let x3: Vec<f64> = data.iter().map(|r| f64::from(r.gender)).collect();

    // Each estimate seeds its own generator, so running them concurrently
    // gives the same values as running them in order.
    let (hair_wrt_gender, (education_wrt_gender, education_wrt_hair)) = rayon::join(
        || mean_partial(&x2, &x3, DerivativeEstimator::MeanQuotient, cfg.sampling),
        || {
            rayon::join(
                || mean_partial(&x1, &x3, DerivativeEstimator::MeanQuotient, cfg.sampling),
                || mean_partial(&x1, &x2, DerivativeEstimator::PairSlope, cfg.sampling),
            )
        },
    );
    let (hair_wrt_gender, education_wrt_gender, education_wrt_hair) =
        (hair_wrt_gender?, education_wrt_gender?, education_wrt_hair?);

    let n = data.len() as f64;
    let probe = [
        x1.iter().sum::<f64>() / n,
        x2.iter().sum::<f64>() / n,
        x3.iter().sum::<f64>() / n,
    ];
    let probe_tensor = Tensor::matrix(1, 3, probe.to_vec())?;
    let w = StochasticVector::new(vec![0.5, 0.5])?;

    let case1_model = hiring_classifier(&[0, 1], &[1.0, 1.0], -11.0)?;
    let j1 = abs_jacobian(&case1_model, &probe_tensor)?;
    let j1 = chain(&j1, 1, 2, hair_wrt_gender)?;
    let case1_v = StochasticVector::new(vec![0.0, 0.0, 1.0])?;
    let case1 = accumulated_sensitivity(&w, &j1, &case1_v)?;

    let case2_model = hiring_classifier(&[0], &[1.0], -5.0)?;
    let j2 = abs_jacobian(&case2_model, &probe_tensor)?;
    let j2 = chain(&chain(&j2, 0, 1, education_wrt_hair)?, 0, 2, education_wrt_gender)?;
    let case2_v = StochasticVector::new(vec![0.0, 0.5, 0.5])?;
    let case2 = accumulated_sensitivity(&w, &j2, &case2_v)?;

    Ok(ParityOutcome {
        hair_wrt_gender,
        education_wrt_gender,
        education_wrt_hair,
        probe,
        case1,
        case2,
        case1_v,
        case2_v,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quotient_of_identical_vectors_is_one() {
        let a = [1.0, 4.0, 2.5, 7.0];
        assert_eq!(diff_quotient(&a, &a, 2).unwrap(), 1.0);
    }

    #[test]
    fn quotient_of_constant_numerator_is_zero() {
        assert_eq!(diff_quotient(&[3.0; 4], &[0.0, 1.0, 2.0, 5.0], 0).unwrap(), 0.0);
    }

    #[test]
    fn constant_denominator_is_undefined() {
        assert!(matches!(
            diff_quotient(&[1.0, 2.0, 3.0], &[1.0; 3], 1),
            Err(SyntheticError::UndefinedDerivative)
        ));
        assert!(matches!(
            mean_partial(&[1.0, 2.0], &[4.0, 4.0], DerivativeEstimator::PairSlope, PartialSampling::default()),
            Err(SyntheticError::UndefinedDerivative)
        ));
    }

    #[test]
    fn quotient_excludes_equal_denominators() {
        // At m = 0 only n = 2 has a different b: (1 - 5) / (0 - 1) = 4.
        assert_eq!(diff_quotient(&[1.0, 9.0, 5.0], &[0.0, 0.0, 1.0], 0).unwrap(), 4.0);
    }

    #[test]
    fn estimators_agree_on_binary_denominator() {
        let a = [0.3, 2.0, 1.1, 4.5, 3.3, 0.7];
        let b = [0.0, 1.0, 0.0, 1.0, 1.0, 0.0];
        let all = PartialSampling { points: None, pairs_per_point: None, seed: 1 };
        let mean = mean_partial(&a, &b, DerivativeEstimator::MeanQuotient, all).unwrap();
        let slope = mean_partial(&a, &b, DerivativeEstimator::PairSlope, all).unwrap();
        // Balanced groups: both equal the group-mean gap.
        let gap = (2.0 + 4.5 + 3.3) / 3.0 - (0.3 + 1.1 + 0.7) / 3.0;
        assert!((mean - gap).abs() < 1e-12 && (slope - gap).abs() < 1e-12);
    }

    #[test]
    fn too_few_records() {
        assert!(matches!(gen_hiring(1, 0), Err(SyntheticError::TooFewRecords(1))));
        assert!(diff_quotient(&[1.0], &[1.0], 0).is_err());
        assert!(diff_quotient(&[1.0, 2.0], &[1.0, 2.0], 5).is_err());
    }
}
