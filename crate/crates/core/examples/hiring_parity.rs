//! Statistical-parity cases on synthetic hiring data: a classifier that reads
//! a gender proxy (hair length) against one that reads education only.
//!
//! cargo run --release --example hiring_parity

use predsens::synthetic::{gen_hiring, run_parity_cases, ParityConfig};

fn main() {
    let data = gen_hiring(10_000, 0).unwrap();
    let r = run_parity_cases(&data, &ParityConfig::default()).unwrap();
    println!("d hair / d gender       {:8.4}", r.hair_wrt_gender);
    println!("d education / d gender  {:8.4}", r.education_wrt_gender);
    println!("d education / d hair    {:8.4}", r.education_wrt_hair);
    println!("probe (feature means)   {:?}", r.probe.map(|p| (p * 1000.0).round() / 1000.0));
    println!("case 1 (reads hair)     P = {:.4}   v = {:?}", r.case1, r.case1_v.entries());
    println!("case 2 (education only) P = {:.4}   v = {:?}", r.case2, r.case2_v.entries());
}
