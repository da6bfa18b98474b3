//! Fixtures shared by the criterion benchmarks.

use sgmc_core::synthgen::{self, ErrorModel, Instance, InstanceSpec};

/// A seeded instance of the kind the phase-transition sweeps generate.
pub fn fixture(n: usize, rank: usize, density: f64, error_rate: f64) -> Instance {
    synthgen::generate(&InstanceSpec {
        n,
        rank,
        density,
        error_rate,
        error_model: ErrorModel::AdditiveGaussian,
        additive: true,
        seed: 0x5eed,
    })
    .expect("valid fixture spec")
}
