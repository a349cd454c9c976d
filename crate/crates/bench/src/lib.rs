//! Shared fixtures for the benchmarks.

use ntklab::harness::gen_unit_input;
use ntklab::{init_network, NetworkConfig, Parameters};

/// Constant-width network with input width `m` and a fixed unit input.
pub fn fixture(depth: usize, m: usize, sigma_w_sq: f64) -> (Parameters, Vec<f64>) {
    let cfg = NetworkConfig::constant_width(depth, m, m, sigma_w_sq, 0.0).expect("valid fixture");
    let x = gen_unit_input(m, 1).expect("valid width");
    (init_network(&cfg, 0), x)
}
