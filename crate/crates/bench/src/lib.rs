//! Shared fixtures for the benchmarks.

use scenrep_core::experiments::default_weights;
use scenrep_core::svd::fit_basis;
use scenrep_core::synth::synth_generate;
use scenrep_core::{Category, Dataset, WeightVector, ZeroVariancePolicy};

/// Synthetic LVD scenarios on a 50-sample grid.
pub fn lvd(n: usize, seed: u64) -> Dataset {
    synth_generate(Category::Lvd, n, 50, seed).expect("synthetic LVD data")
}

pub fn weights(data: &Dataset) -> WeightVector {
    default_weights(data, ZeroVariancePolicy::Error).expect("non-degenerate columns")
}

/// Reduced coordinates of `data` in its leading `d` directions.
pub fn coordinates(data: &Dataset, d: usize) -> Vec<Vec<f64>> {
    fit_basis(data, &weights(data), d).expect("basis").1
}
