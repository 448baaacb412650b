//! Sweeps the Lipschitz bound of `f = θx` and prints a plot-ready table of
//! `P` against `L` next to the sample's unconstrained optimum.
//!
//! cargo run --example lipschitz_sweep

use predsens::synthetic::{default_bounds, gen_threshold, least_squares_slope, lipschitz_sweep, sweep_table};

fn main() {
    let data = gen_threshold(1000, 0).unwrap();
    let points = lipschitz_sweep(&default_bounds(20, 0.2), &data, 1.0).unwrap();
    println!("# unconstrained optimum {:.5}", least_squares_slope(&data));
    print!("{}", sweep_table(&points));
}
