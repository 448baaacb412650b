//! Scores against noisy annotator labels: majority vote, Fleiss' kappa,
//! point-biserial correlation, mutual information and a bootstrap comparison.
//!
//! cargo run --release --example stats_correlation

use predsens::corpus::{gen_toy_corpus, simulate_annotations, ToyCorpusSpec};
use predsens::stats::{bootstrap_significance, fleiss_kappa, mutual_information, point_biserial};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let records = gen_toy_corpus(&ToyCorpusSpec { n: 600, ..ToyCorpusSpec::default() }).unwrap();
    let annotations = simulate_annotations(&records, 3, 0.15, 1).unwrap();
    let votes = annotations.majority();
    let labels: Vec<bool> = votes.iter().map(|v| v.biased).collect();
    println!("{} examples, {} flagged by majority", labels.len(), labels.iter().filter(|l| **l).count());
    println!("Fleiss kappa {:.3}", fleiss_kappa(&annotations.category_counts(), annotations.raters()).unwrap());

    // An informative score and an uninformative one.
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let truth: Vec<f64> = records
        .iter()
        .map(|r| f64::from(u8::from(r.biased == Some(true))) + rng.random_range(0.0..0.8))
        .collect();
    let noise: Vec<f64> = (0..records.len()).map(|_| rng.random::<f64>()).collect();
    for (name, scores) in [("informative", &truth), ("noise", &noise)] {
        println!(
            "{name:<12} r = {:+.3}  MI = {:.3} nats",
            point_biserial(&labels, scores).unwrap(),
            mutual_information(&labels, scores, 8).unwrap()
        );
    }
    let outcome = bootstrap_significance(&labels, &truth, &noise, 1000, 0).unwrap();
    println!("bootstrap p (informative beats noise) = {}", outcome.p_value);
}
