use super::StatsError;

/// Default number of equal-frequency bins for [`mutual_information`].
pub const DEFAULT_MI_BINS: usize = 8;

/// Point-biserial correlation between binary `labels` and `scores`:
/// `(M1 - M0) / s · sqrt(p0 p1)` with population standard deviation `s`,
/// which is Pearson's r on 0/1-coded labels.
pub fn point_biserial(labels: &[bool], scores: &[f64]) -> Result<f64, StatsError> {
    if labels.len() != scores.len() {
        return Err(StatsError::LengthMismatch(labels.len(), scores.len()));
    }
    let n = labels.len();
    let n1 = labels.iter().filter(|l| **l).count();
    let n0 = n - n1;
    if n0 == 0 || n1 == 0 {
        return Err(StatsError::UndefinedCorrelation("labels contain a single class"));
    }
    let mean = scores.iter().sum::<f64>() / n as f64;
    let var = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n as f64;
    if var <= 0.0 || !var.is_finite() {
        return Err(StatsError::UndefinedCorrelation("scores are constant"));
    }
    let (mut sum1, mut sum0) = (0.0, 0.0);
    for (&l, &s) in labels.iter().zip(scores) {
        if l {
            sum1 += s;
        } else {
            sum0 += s;
        }
    }
    let (m1, m0) = (sum1 / n1 as f64, sum0 / n0 as f64);
    let (p1, p0) = (n1 as f64 / n as f64, n0 as f64 / n as f64);
    Ok(((m1 - m0) / var.sqrt() * (p0 * p1).sqrt()).clamp(-1.0, 1.0))
}

/// Equal-frequency bin index per score. Bins follow rank order; tied scores
/// share the bin of their first occurrence, so any strictly monotone transform
/// of the scores gives the same binning.
pub fn quantile_bins(scores: &[f64], bins: usize) -> Result<Vec<usize>, StatsError> {
    if bins < 2 {
        return Err(StatsError::InvalidParameter(format!("need at least 2 bins, got {bins}")));
    }
    if scores.len() < bins {
        return Err(StatsError::TooFewSamples { needed: bins, got: scores.len() });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(StatsError::InvalidParameter("scores must be finite".into()));
    }
    let n = scores.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
    let mut out = vec![0; n];
    let mut group_rank = 0;
    for (rank, &i) in order.iter().enumerate() {
        if rank > 0 && scores[i] != scores[order[rank - 1]] {
            group_rank = rank;
        }
        out[i] = group_rank * bins / n;
    }
    Ok(out)
}

/// Plug-in mutual information (nats) between `labels` and equal-frequency bins of `scores`.
pub fn mutual_information(labels: &[bool], scores: &[f64], bins: usize) -> Result<f64, StatsError> {
    if labels.len() != scores.len() {
        return Err(StatsError::LengthMismatch(labels.len(), scores.len()));
    }
    let assigned = quantile_bins(scores, bins)?;
    let n = labels.len() as f64;
    let mut joint = vec![[0usize; 2]; bins];
    for (&b, &l) in assigned.iter().zip(labels) {
        joint[b][usize::from(l)] += 1;
    }
    let label_counts = [
        joint.iter().map(|c| c[0]).sum::<usize>() as f64,
        joint.iter().map(|c| c[1]).sum::<usize>() as f64,
    ];
    let mut mi = 0.0;
    for cell in &joint {
        let bin_total = (cell[0] + cell[1]) as f64;
        for l in 0..2 {
            if cell[l] > 0 {
                let pxy = cell[l] as f64 / n;
                mi += pxy * (pxy * n * n / (bin_total * label_counts[l])).ln();
            }
        }
    }
    Ok(mi.max(0.0))
}

/// Fleiss' kappa for an `examples x categories` count matrix with `raters`
/// ratings per row. When chance agreement is 1 (every rating in one
/// category) observed agreement is also perfect and 1 is returned.
pub fn fleiss_kappa(counts: &[Vec<usize>], raters: usize) -> Result<f64, StatsError> {
    if raters < 2 {
        return Err(StatsError::InvalidParameter(format!("need at least 2 raters, got {raters}")));
    }
    if counts.is_empty() {
        return Err(StatsError::TooFewSamples { needed: 1, got: 0 });
    }
    let k = counts[0].len();
    for (row, c) in counts.iter().enumerate() {
        let sum: usize = c.iter().sum();
        if sum != raters || c.len() != k {
            return Err(StatsError::InconsistentRow { row, sum, raters });
        }
    }
    let n = counts.len() as f64;
    let r = raters as f64;
    let observed = counts
        .iter()
        .map(|c| (c.iter().map(|&x| (x * x) as f64).sum::<f64>() - r) / (r * (r - 1.0)))
        .sum::<f64>()
        / n;
    let chance: f64 = (0..k)
        .map(|j| {
            let pj = counts.iter().map(|c| c[j]).sum::<usize>() as f64 / (n * r);
            pj * pj
        })
        .sum();
    if (1.0 - chance).abs() < 1e-15 {
        return Ok(1.0);
    }
    Ok((observed - chance) / (1.0 - chance))
}
