#![allow(dead_code)]

use ndarray::{Array1, Array2};
use pcs_core::data::standardize;
use pcs_core::{DataMatrix, SeedSpec};
use rand::Rng;
use rand_distr::StandardNormal;

/// Standardized Gaussian design with `y = x[:, ..k] . coef + sd * noise`.
pub fn linear_fixture(n: usize, p: usize, coef: &[f64], sd: f64, seed: u64) -> DataMatrix {
    let mut rng = SeedSpec::new(seed).rng();
    let x = Array2::from_shape_fn((n, p), |_| rng.sample::<f64, _>(StandardNormal));
    let raw = DataMatrix::from_arrays(x, Array1::zeros(n)).unwrap();
    let std = standardize(&raw).unwrap();
    let y = Array1::from_shape_fn(n, |i| {
        coef.iter().enumerate().map(|(j, c)| c * std.x()[[i, j]]).sum::<f64>() + sd * rng.sample::<f64, _>(StandardNormal)
    });
    std.with_response(y).unwrap()
}
