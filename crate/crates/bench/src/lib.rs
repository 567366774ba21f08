//! Shared inputs for the criterion benchmarks.

use commselect_core::{generate, GenParams, PlantedNetwork};

/// Reference-size network (N = 100, k = 25) at the given mixing.
pub fn reference_network(mu_t: f64, mu_w: f64, seed: u64) -> PlantedNetwork {
    generate(&GenParams::default().with_mixing(mu_t, mu_w).with_seed(seed)).expect("reference network")
}
