//! Fits under the individual-fairness constraint
//! `D(f(x), f(x')) <= L * d(x, x')`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::train::{check_dataset, init_model, split, summarize, StepGradients};
use super::{DiffModel, Encoder, ExampleInput, LabeledExample, LipschitzBound, ModelError, ModelKind, NormOrder, TrainConfig};
use crate::autodiff::{Graph, Tensor};

/// Pairs checked exhaustively up to this many examples, sampled above it.
const EXHAUSTIVE_LIMIT: usize = 200;
const SAMPLED_PAIRS: usize = 20_000;
const TOLERANCE: f64 = 1e-6;

/// Result of fitting the scalar model `f = θx` under `|θ| <= L`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarFit {
    pub theta: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `max(0, |θ| - L)`; zero whenever the projection ran.
    pub violation: f64,
    pub warnings: Vec<String>,
}

/// Projected full-batch gradient descent on the mean squared loss
/// `(y - θx)²`, clamping `θ` into `[-L, L]` after every step. With both
/// distances taken as Lp norms on scalars the constraint is exactly `|θ| <= L`.
pub fn fit_scalar_lipschitz(xs: &[f64], ys: &[f64], cfg: &TrainConfig) -> Result<ScalarFit, ModelError> {
    cfg.validate()?;
    let bound = cfg
        .lipschitz
        .ok_or_else(|| ModelError::Config("Lipschitz bound required".into()))?
        .bound;
    if xs.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    if xs.len() != ys.len() {
        return Err(ModelError::Config(format!("{} inputs but {} targets", xs.len(), ys.len())));
    }
    let n = xs.len() as f64;
    let mut theta: f64 = 0.0;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.epochs {
        iterations += 1;
        let grad = -2.0 * xs.iter().zip(ys).map(|(x, y)| x * (y - theta * x)).sum::<f64>() / n;
        let next = (theta - cfg.learning_rate * grad).clamp(-bound, bound);
        if !next.is_finite() {
            return Err(ModelError::Autodiff(crate::autodiff::AutodiffError::NonFinite { op: "lipschitz_fit" }));
        }
        let delta = (next - theta).abs();
        theta = next;
        if delta <= 1e-15 * theta.abs().max(1.0) {
            converged = true;
            break;
        }
    }
    let violation = (theta.abs() - bound).max(0.0);
    let mut warnings = Vec::new();
    if !converged {
        warnings.push(format!(
            "no convergence after {iterations} iterations; final constraint violation {violation:e}"
        ));
    }
    Ok(ScalarFit { theta, iterations, converged, violation, warnings })
}

/// Trains a tabular classifier with a squared penalty on constraint violations
/// between neighbouring examples of each minibatch, then verifies every
/// training pair. If a violation above 1e-6 survives, the output layer is
/// shrunk toward a constant predictor (always feasible) by bisection.
pub fn train_lipschitz(data: &[LabeledExample], cfg: &TrainConfig) -> Result<DiffModel, ModelError> {
    cfg.validate()?;
    let bound = cfg
        .lipschitz
        .ok_or_else(|| ModelError::Config("Lipschitz bound required".into()))?;
    let labels: Vec<usize> = data.iter().map(|e| e.label).collect();
    let classes = check_dataset(data, &labels, "task")?;
    let inputs = data
        .iter()
        .map(|e| match &e.input {
            ExampleInput::Features(f) => Ok(f.clone()),
            ExampleInput::Tokens(_) => Err(ModelError::InputKind { expected: "feature" }),
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (train_idx, val_idx) = split(data.len(), cfg.validation_fraction, &mut rng);
    let mut model = init_model(data, &train_idx, classes, &cfg.architecture, ModelKind::Lipschitz, &mut rng)?;

    let mut order = train_idx.clone();
    let mut final_loss = 0.0;
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let mut step = StepGradients::zeros(&mut model, false);
            for &i in batch {
                epoch_loss += step.add_example(&model, &data[i].input, labels[i])?;
            }
            for pair in batch.windows(2) {
                epoch_loss += add_pair_penalty(
                    &mut step,
                    &model,
                    &inputs[pair[0]],
                    &inputs[pair[1]],
                    bound,
                    cfg.penalty_weight,
                )?;
            }
            step.apply(&mut model, cfg.learning_rate / batch.len() as f64);
        }
        final_loss = epoch_loss / order.len() as f64;
    }

    let mut summary = summarize(&model, data, &labels, &train_idx, &val_idx, final_loss, cfg.epochs)?;
    let mut violation = max_constraint_violation(&model, &inputs, bound, cfg.seed)?;
    if violation > TOLERANCE {
        let before = violation;
        let scale = repair_by_shrinking(&mut model, &inputs, bound, cfg.seed)?;
        violation = max_constraint_violation(&model, &inputs, bound, cfg.seed)?;
        summary = summarize(&model, data, &labels, &train_idx, &val_idx, final_loss, cfg.epochs)?;
        summary.warnings.push(format!(
            "penalty training left violation {before:e}; output layer scaled by {scale:.6}"
        ));
    }
    if violation > TOLERANCE {
        summary
            .warnings
            .push(format!("constraint not met; final violation {violation:e}"));
    }
    summary.constraint_violation = Some(violation);
    model.summary = summary;
    Ok(model)
}

fn add_pair_penalty(
    step: &mut StepGradients,
    model: &DiffModel,
    a: &[f64],
    b: &[f64],
    bound: LipschitzBound,
    weight: f64,
) -> Result<f64, ModelError> {
    if weight == 0.0 {
        return Ok(0.0);
    }
    let input_dist = bound.norm.distance(a, b);
    let mut g = Graph::new();
    let xa = g.input(Tensor::from_parts(vec![1, a.len()], a.to_vec()));
    let xb = g.input(Tensor::from_parts(vec![1, b.len()], b.to_vec()));
    let (mut pa, mut pb) = (Vec::new(), Vec::new());
    let la = model.record_logits(&mut g, xa, &mut pa)?;
    let fa = g.softmax(la)?;
    let lb = model.record_logits(&mut g, xb, &mut pb)?;
    let fb = g.softmax(lb)?;
    let diff = g.sub(fa, fb)?;
    // L2 compares squared distances; the sign of the violation is unchanged.
    let (dist, limit) = match bound.norm {
        NormOrder::L1 => {
            let d = g.abs(diff)?;
            (g.sum(d)?, bound.bound * input_dist)
        }
        NormOrder::L2 => {
            let sq = g.mul(diff, diff)?;
            (g.sum(sq)?, (bound.bound * input_dist).powi(2))
        }
    };
    let excess = g.value(dist)?.data()[0] - limit;
    if excess <= 0.0 {
        return Ok(0.0);
    }
    let grads = g.backward(dist, Tensor::scalar(2.0 * weight * excess))?;
    let ea = crate::models::EmbeddedInput::features(a);
    let eb = crate::models::EmbeddedInput::features(b);
    step.absorb(model, &grads, &pa, xa, &ea)?;
    step.absorb(model, &grads, &pb, xb, &eb)?;
    Ok(weight * excess * excess)
}

/// Largest `D(f(x), f(x')) - L d(x, x')` over training pairs, floored at 0.
/// Exhaustive for up to 200 inputs, otherwise 20,000 seeded random pairs.
pub fn max_constraint_violation(
    model: &DiffModel,
    inputs: &[Vec<f64>],
    bound: LipschitzBound,
    seed: u64,
) -> Result<f64, ModelError> {
    let outputs = inputs
        .iter()
        .map(|x| model.predict(&model.embed_features(x)?))
        .collect::<Result<Vec<_>, _>>()?;
    let check = |i: usize, j: usize| {
        bound.norm.distance(&outputs[i], &outputs[j])
            - bound.bound * bound.norm.distance(&inputs[i], &inputs[j])
    };
    let n = inputs.len();
    let mut worst: f64 = 0.0;
    if n <= EXHAUSTIVE_LIMIT {
        for i in 0..n {
            for j in i + 1..n {
                worst = worst.max(check(i, j));
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_11b5);
        for _ in 0..SAMPLED_PAIRS {
            let i = rng.random_range(0..n);
            let j = rng.random_range(0..n);
            if i != j {
                worst = worst.max(check(i, j));
            }
        }
    }
    Ok(worst)
}

fn scaled_output(model: &DiffModel, scale: f64) -> DiffModel {
    let mut m = model.clone();
    if let Some(last) = m.layers.last_mut() {
        for v in last.weight.data_mut().iter_mut().chain(last.bias.data_mut().iter_mut()) {
            *v *= scale;
        }
    }
    m
}

/// Bisects the largest output-layer scale in `[0, 1]` whose model passes the
/// pair check. Scale 0 gives constant logits and is always feasible.
fn repair_by_shrinking(
    model: &mut DiffModel,
    inputs: &[Vec<f64>],
    bound: LipschitzBound,
    seed: u64,
) -> Result<f64, ModelError> {
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if max_constraint_violation(&scaled_output(model, mid), inputs, bound, seed)? <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    debug_assert!(matches!(model.encoder, Encoder::Tabular { .. }));
    *model = scaled_output(model, lo);
    Ok(lo)
}
