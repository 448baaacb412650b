use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CorpusError, TextRecord};

/// A token that co-occurs with one protected class and pulls labels toward
/// `target_label`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantedCorrelation {
    pub token: String,
    pub protected_class: u8,
    /// `P(protected = protected_class | token present)`.
    pub strength: f64,
    /// Marginal probability that a record contains the token.
    pub rate: f64,
    /// Class the label is flipped to under bias injection.
    pub target_label: usize,
}

/// Recipe for a synthetic text-classification corpus with planted
/// protected-attribute correlations and ground-truth bias flags.
///
/// Each record draws a balanced protected class, then each planted token with
/// a class-conditional probability chosen so its marginal rate and
/// co-occurrence strength hit their targets. The task label is uniform and the
/// text carries `topic_tokens` words from that label's topic vocabulary plus
/// fillers. For every planted token present (in list order), with probability
/// `bias_rate` a label different from the token's target is flipped to the
/// target and the record is flagged as biased.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToyCorpusSpec {
    pub classes: usize,
    /// Topic words per class.
    pub topic_vocab: usize,
    pub filler_vocab: usize,
    pub topic_tokens: usize,
    pub min_fillers: usize,
    pub max_fillers: usize,
    pub planted: Vec<PlantedCorrelation>,
    pub bias_rate: f64,
    /// Probability that a record's topic words are split between its class and
    /// a second random class, leaving the label genuinely ambiguous without
    /// any protected-attribute involvement.
    pub ambiguous_rate: f64,
    pub n: usize,
    pub seed: u64,
}

impl Default for ToyCorpusSpec {
    fn default() -> Self {
        let planted = |token: &str, protected_class, strength, rate, target_label| PlantedCorrelation {
            token: token.into(),
            protected_class,
            strength,
            rate,
            target_label,
        };
        Self {
            classes: 3,
            topic_vocab: 12,
            filler_vocab: 40,
            topic_tokens: 2,
            min_fillers: 3,
            max_fillers: 6,
            planted: vec![
                planted("she", 1, 1.0, 0.4, 1),
                planted("he", 0, 1.0, 0.4, 2),
                planted("volleyball", 1, 0.9, 0.2, 1),
                planted("football", 0, 0.9, 0.2, 2),
            ],
            bias_rate: 0.5,
            ambiguous_rate: 0.3,
            n: 2000,
            seed: 0,
        }
    }
}

impl ToyCorpusSpec {
    pub fn validate(&self) -> Result<(), CorpusError> {
        let bad = |m: String| Err(CorpusError::Spec(m));
        if self.classes < 2 {
            return bad(format!("need at least 2 classes, got {}", self.classes));
        }
        if self.topic_vocab == 0 || self.topic_tokens == 0 {
            return bad("topic vocabulary and topic tokens per record must be positive".into());
        }
        if self.min_fillers > self.max_fillers || (self.max_fillers > 0 && self.filler_vocab == 0) {
            return bad("filler range is empty or has no vocabulary".into());
        }
        if !(0.0..=1.0).contains(&self.bias_rate) {
            return bad(format!("bias rate {} outside [0, 1]", self.bias_rate));
        }
        if !(0.0..=1.0).contains(&self.ambiguous_rate) {
            return bad(format!("ambiguous rate {} outside [0, 1]", self.ambiguous_rate));
        }
        if self.ambiguous_rate > 0.0 && self.topic_tokens < 2 {
            return bad("ambiguous records need at least 2 topic tokens".into());
        }
        for p in &self.planted {
            if !(0.0..=1.0).contains(&p.strength) || !(0.0..=1.0).contains(&p.rate) {
                return bad(format!("{}: strength and rate must lie in [0, 1]", p.token));
            }
            if p.rate * p.strength.max(1.0 - p.strength) > 0.5 {
                return bad(format!("{}: rate x strength exceeds what balanced classes allow", p.token));
            }
            if p.protected_class > 1 || p.target_label >= self.classes {
                return bad(format!("{}: protected class or target label out of range", p.token));
            }
            if p.token.is_empty() || p.token.chars().any(char::is_whitespace) {
                return bad(format!("planted token {:?} is not a single token", p.token));
            }
        }
        Ok(())
    }

    pub fn topic_word(class: usize, j: usize) -> String {
        format!("topic{class}_{j}")
    }

    pub fn filler_word(j: usize) -> String {
        format!("w{j}")
    }
}

pub fn gen_toy_corpus(spec: &ToyCorpusSpec) -> Result<Vec<TextRecord>, CorpusError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        let protected = u8::from(rng.random_bool(0.5));
        let present: Vec<&PlantedCorrelation> = spec
            .planted
            .iter()
            .filter(|p| {
                let same = p.protected_class == protected;
                let prob = 2.0 * p.rate * if same { p.strength } else { 1.0 - p.strength };
                rng.random_bool(prob.min(1.0))
            })
            .collect();
        let topic = rng.random_range(0..spec.classes);
        let mut label = topic;
        let mut biased = false;
        for p in &present {
            if rng.random_bool(spec.bias_rate) && label != p.target_label {
                label = p.target_label;
                biased = true;
                break;
            }
        }

        let second = rng.random_bool(spec.ambiguous_rate).then(|| {
            let other = rng.random_range(0..spec.classes - 1);
            if other >= topic { other + 1 } else { other }
        });
        let mut tokens: Vec<String> = (0..spec.topic_tokens)
            .map(|j| {
                let class = match second {
                    Some(other) if j % 2 == 1 => other,
                    _ => topic,
                };
                ToyCorpusSpec::topic_word(class, rng.random_range(0..spec.topic_vocab))
            })
            .collect();
        let fillers = rng.random_range(spec.min_fillers..=spec.max_fillers);
        tokens.extend((0..fillers).map(|_| ToyCorpusSpec::filler_word(rng.random_range(0..spec.filler_vocab))));
        tokens.extend(present.iter().map(|p| p.token.clone()));
        tokens.shuffle(&mut rng);

        out.push(TextRecord {
            id: format!("toy{i:05}"),
            tokens,
            label,
            protected,
            annotations: None,
            biased: Some(biased),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn spec_with(planted: Vec<PlantedCorrelation>, bias_rate: f64, n: usize) -> ToyCorpusSpec {
        ToyCorpusSpec { planted, bias_rate, n, ambiguous_rate: 0.0, ..ToyCorpusSpec::default() }
    }

    fn topic_classes(r: &TextRecord) -> BTreeSet<usize> {
        r.tokens
            .iter()
            .filter_map(|t| t.strip_prefix("topic").and_then(|s| s.split('_').next()?.parse().ok()))
            .collect()
    }

    fn marker(strength: f64) -> PlantedCorrelation {
        PlantedCorrelation { token: "volleyball".into(), protected_class: 1, strength, rate: 0.3, target_label: 1 }
    }

    #[test]
    fn full_strength_marker_stays_in_its_class() {
        let recs = gen_toy_corpus(&spec_with(vec![marker(1.0)], 0.3, 3000)).unwrap();
        let with: Vec<_> = recs.iter().filter(|r| r.tokens.iter().any(|t| t == "volleyball")).collect();
        assert!(!with.is_empty());
        assert!(with.iter().all(|r| r.protected == 1));
    }

    #[test]
    fn zero_bias_rate_never_flags() {
        let recs = gen_toy_corpus(&spec_with(vec![marker(0.8)], 0.0, 1000)).unwrap();
        assert!(recs.iter().all(|r| r.biased == Some(false)));
    }

    #[test]
    fn flags_mark_flipped_labels() {
        let recs = gen_toy_corpus(&spec_with(vec![marker(0.8)], 0.7, 1000)).unwrap();
        for r in &recs {
            let topics = topic_classes(r);
            assert_eq!(topics.len(), 1);
            assert_eq!(r.biased == Some(true), !topics.contains(&r.label));
        }
        assert!(recs.iter().any(|r| r.biased == Some(true)));
    }

    #[test]
    fn ambiguous_records_mix_two_topics_without_flags() {
        let spec = ToyCorpusSpec { ambiguous_rate: 1.0, ..spec_with(vec![marker(0.8)], 0.0, 500) };
        for r in gen_toy_corpus(&spec).unwrap() {
            let topics = topic_classes(&r);
            assert_eq!(topics.len(), 2);
            assert!(topics.contains(&r.label));
            assert_eq!(r.biased, Some(false));
        }
    }

    #[test]
    fn invalid_specs() {
        assert!(gen_toy_corpus(&spec_with(vec![marker(1.5)], 0.1, 10)).is_err());
        assert!(gen_toy_corpus(&spec_with(vec![], 1.1, 10)).is_err());
        let mut m = marker(1.0);
        m.rate = 0.9;
        assert!(gen_toy_corpus(&spec_with(vec![m], 0.1, 10)).is_err());
        assert!(gen_toy_corpus(&ToyCorpusSpec { classes: 1, ..ToyCorpusSpec::default() }).is_err());
    }
}
