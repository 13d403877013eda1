//! Fixtures shared by the criterion benchmarks.

use pcs_core::simgen::{simulate, Design};
use pcs_core::{DataMatrix, Setting};

/// Gaussian-setting dataset with interaction features, `p = p_base + p_base(p_base-1)/2`.
pub fn gaussian_fixture(n: usize, p_base: usize, seed: u64) -> DataMatrix {
    let config = Setting::Gaussian.config(n, Design::Interactions { p_base }, seed);
    simulate(&config).expect("fixture simulation").data
}
