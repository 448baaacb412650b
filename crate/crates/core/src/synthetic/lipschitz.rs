use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SyntheticError;
use crate::autodiff::{AbsJacobian, Graph, Tensor};
use crate::models::{fit_scalar_lipschitz, LipschitzBound, NormOrder, TrainConfig};
use crate::sensitivity::{accumulated_sensitivity, StochasticVector};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub bound: f64,
    pub theta: f64,
    pub sensitivity: f64,
}

/// `x ~ U(0, 10)`, `y = 0` below 5 and `1` otherwise.
pub fn gen_threshold(n: usize, seed: u64) -> Result<Vec<(f64, f64)>, SyntheticError> {
    if n < 2 {
        return Err(SyntheticError::TooFewRecords(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|_| {
            let x: f64 = rng.random_range(0.0..10.0);
            (x, if x < 5.0 { 0.0 } else { 1.0 })
        })
        .collect())
}

/// Unconstrained least-squares slope through the origin, `Σxy / Σx²`.
pub fn least_squares_slope(data: &[(f64, f64)]) -> f64 {
    let sxy: f64 = data.iter().map(|(x, y)| x * y).sum();
    let sxx: f64 = data.iter().map(|(x, _)| x * x).sum();
    sxy / sxx
}

/// `count` evenly spaced bounds ending at `max`: `max/count, 2·max/count, ..., max`.
pub fn default_bounds(count: usize, max: f64) -> Vec<f64> {
    (1..=count).map(|i| max * i as f64 / count as f64).collect()
}

fn sweep_config(bound: f64) -> TrainConfig {
    TrainConfig {
        epochs: 100_000,
        learning_rate: 0.01,
        lipschitz: Some(LipschitzBound { bound, norm: NormOrder::L1 }),
        ..TrainConfig::default()
    }
}

/// `P` for `f = θx` at `probe_x` with `w = v = [1]`, through the tape.
fn scalar_sensitivity(theta: f64, probe_x: f64) -> Result<f64, SyntheticError> {
    let mut g = Graph::new();
    let x = g.input(Tensor::matrix(1, 1, vec![probe_x])?);
    let t = g.input(Tensor::matrix(1, 1, vec![theta])?);
    let f = g.matmul(x, t)?;
    let grad = g.grad_component(f, 0)?.wrt(x)?;
    let j = AbsJacobian::from_rows(vec![grad.into_data()])?;
    let one = StochasticVector::uniform(1)?;
    Ok(accumulated_sensitivity(&one, &j, &one)?)
}

/// Fits `f = θx` under `|θ| <= L` for every bound and records `P` at
/// `probe_x`. Points are independent and computed in parallel; output order
/// follows `bounds`.
pub fn lipschitz_sweep(
    bounds: &[f64],
    data: &[(f64, f64)],
    probe_x: f64,
) -> Result<Vec<SweepPoint>, SyntheticError> {
    if let Some(&bad) = bounds.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
        return Err(SyntheticError::InvalidBound(bad));
    }
    let xs: Vec<f64> = data.iter().map(|d| d.0).collect();
    let ys: Vec<f64> = data.iter().map(|d| d.1).collect();
    bounds
        .par_iter()
        .map(|&bound| {
            let fit = fit_scalar_lipschitz(&xs, &ys, &sweep_config(bound))?;
            Ok(SweepPoint { bound, theta: fit.theta, sensitivity: scalar_sensitivity(fit.theta, probe_x)? })
        })
        .collect()
}

/// Tab-separated `L` and `P` columns with a header row.
pub fn sweep_table(points: &[SweepPoint]) -> String {
    let mut out = String::from("L\tP\n");
    for p in points {
        out.push_str(&format!("{:.6}\t{:.10}\n", p.bound, p.sensitivity));
    }
    out
}
