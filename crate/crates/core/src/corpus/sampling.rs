use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CorpusError, TextRecord};
use crate::stats::AnnotationSet;

/// Drops `fraction` of the records whose protected label is `class`, chosen by
/// a seeded shuffle. Survivors keep their input order.
pub fn downsample_protected(
    records: &[TextRecord],
    class: u8,
    fraction: f64,
    seed: u64,
) -> Result<Vec<TextRecord>, CorpusError> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(CorpusError::Spec(format!("downsampling fraction {fraction} outside [0, 1]")));
    }
    let mut members: Vec<usize> = (0..records.len()).filter(|&i| records[i].protected == class).collect();
    members.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let drop_count = (members.len() as f64 * fraction).round() as usize;
    let mut dropped = vec![false; records.len()];
    for &i in &members[..drop_count] {
        dropped[i] = true;
    }
    Ok(records.iter().zip(dropped).filter(|(_, d)| !d).map(|(r, _)| r.clone()).collect())
}

/// Simulated crowd labels: each of `raters` annotators reports the record's
/// ground-truth `biased` flag, flipped independently with probability `noise`.
pub fn simulate_annotations(
    records: &[TextRecord],
    raters: usize,
    noise: f64,
    seed: u64,
) -> Result<AnnotationSet, CorpusError> {
    if raters == 0 {
        return Err(CorpusError::Spec("need at least one rater".into()));
    }
    if !(0.0..=1.0).contains(&noise) {
        return Err(CorpusError::Spec(format!("rater noise {noise} outside [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels = Vec::with_capacity(records.len());
    for (line, r) in records.iter().enumerate() {
        let truth = r.biased.ok_or_else(|| CorpusError::Parse {
            line: line + 1,
            detail: format!("record {} has no ground-truth bias flag", r.id),
        })?;
        labels.push((0..raters).map(|_| u8::from(truth != rng.random_bool(noise))).collect());
    }
    AnnotationSet::new(records.iter().map(|r| r.id.clone()).collect(), labels)
        .map_err(|e| CorpusError::Spec(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: usize, protected: u8, biased: bool) -> TextRecord {
        TextRecord {
            id: format!("r{id}"),
            tokens: vec!["w".into()],
            label: 0,
            protected,
            annotations: None,
            biased: Some(biased),
        }
    }

    #[test]
    fn halves_one_class_and_keeps_order() {
        let recs: Vec<_> = (0..100).map(|i| rec(i, (i % 2) as u8, false)).collect();
        let kept = downsample_protected(&recs, 1, 0.5, 3).unwrap();
        assert_eq!(kept.iter().filter(|r| r.protected == 1).count(), 25);
        assert_eq!(kept.iter().filter(|r| r.protected == 0).count(), 50);
        let ids: Vec<usize> = kept.iter().map(|r| r.id[1..].parse().unwrap()).collect();
        assert!(ids.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(kept, downsample_protected(&recs, 1, 0.5, 3).unwrap());
    }

    #[test]
    fn noiseless_raters_agree_with_truth() {
        let recs: Vec<_> = (0..20).map(|i| rec(i, 0, i % 3 == 0)).collect();
        let ann = simulate_annotations(&recs, 3, 0.0, 1).unwrap();
        for (r, l) in recs.iter().zip(ann.labels()) {
            assert!(l.iter().all(|&v| (v == 1) == r.biased.unwrap()));
        }
    }

    #[test]
    fn missing_flags_are_rejected() {
        let mut r = rec(0, 0, false);
        r.biased = None;
        assert!(simulate_annotations(&[r], 3, 0.1, 0).is_err());
    }
}
