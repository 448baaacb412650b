use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{point_biserial, StatsError};

const MAX_REDRAWS: usize = 10;

#[derive(Clone, Debug, PartialEq)]
pub struct BootstrapOutcome {
    /// Fraction of resamples where metric `a` correlates worse than `b`, with
    /// exact ties counted as one half.
    pub p_value: f64,
    pub resamples: usize,
    /// Resamples dropped after repeatedly drawing a single label class.
    pub skipped: usize,
}

/// One-sided paired bootstrap: is `scores_a` more correlated with `labels`
/// than `scores_b`? Small p favours `a`.
///
/// Resample `r` draws from its own ChaCha stream (`seed`, stream `r`), so the
/// result is identical whether resamples run sequentially or in parallel.
pub fn bootstrap_significance(
    labels: &[bool],
    scores_a: &[f64],
    scores_b: &[f64],
    resamples: usize,
    seed: u64,
) -> Result<BootstrapOutcome, StatsError> {
    let n = labels.len();
    if scores_a.len() != n || scores_b.len() != n {
        return Err(StatsError::LengthMismatch(scores_a.len(), scores_b.len().max(n)));
    }
    if resamples < 100 {
        return Err(StatsError::InvalidParameter(format!("need at least 100 resamples, got {resamples}")));
    }
    if n < 2 {
        return Err(StatsError::TooFewSamples { needed: 2, got: n });
    }

    let outcomes: Vec<Option<f64>> = (0..resamples)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let mut idx = vec![0usize; n];
            for _ in 0..MAX_REDRAWS {
                idx.iter_mut().for_each(|i| *i = rng.random_range(0..n));
                let l: Vec<bool> = idx.iter().map(|&i| labels[i]).collect();
                let a: Vec<f64> = idx.iter().map(|&i| scores_a[i]).collect();
                let b: Vec<f64> = idx.iter().map(|&i| scores_b[i]).collect();
                if let (Ok(ra), Ok(rb)) = (point_biserial(&l, &a), point_biserial(&l, &b)) {
                    return Some(match ra.total_cmp(&rb) {
                        std::cmp::Ordering::Less => 1.0,
                        std::cmp::Ordering::Equal => 0.5,
                        std::cmp::Ordering::Greater => 0.0,
                    });
                }
            }
            None
        })
        .collect();

    let used = outcomes.iter().flatten().count();
    if used == 0 {
        return Err(StatsError::NoValidResamples);
    }
    let not_better: f64 = outcomes.iter().flatten().sum();
    Ok(BootstrapOutcome {
        p_value: not_better / used as f64,
        resamples: used,
        skipped: resamples - used,
    })
}
