//! Data and model perturbations.
//!
//! Data perturbations are bootstrap resamples of observation rows, the
//! identity, or a null-constrained regeneration of the response. Model
//! perturbations are the penalties of a lambda path.

use std::borrow::Cow;

use ndarray::Array1;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::error::{PcsError, Result};
use crate::lasso::LambdaPath;
use crate::seed::SeedSpec;

/// How the response is regenerated under a null hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NullKind {
    /// Uniform random permutation of `y`, features untouched.
    PermuteResponse,
    /// `y` replaced by i.i.d. `Normal(mean, sd)` draws.
    GaussianParametric { mean: f64, sd: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullSpec {
    pub kind: NullKind,
    pub seed: SeedSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataPerturbationKind {
    Identity,
    /// Replicate index, starting at 1.
    Bootstrap(usize),
    NullConstrained(NullSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataPerturbation {
    pub kind: DataPerturbationKind,
    pub seed: SeedSpec,
}

impl DataPerturbation {
    pub fn identity() -> Self {
        DataPerturbation { kind: DataPerturbationKind::Identity, seed: SeedSpec::new(0) }
    }

    pub fn id(&self) -> String {
        match &self.kind {
            DataPerturbationKind::Identity => "identity".to_string(),
            DataPerturbationKind::Bootstrap(b) => format!("bootstrap[{b}]"),
            DataPerturbationKind::NullConstrained(_) => "null".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelPerturbation {
    pub lambda: f64,
    pub model_id: String,
}

impl ModelPerturbation {
    /// One perturbation per penalty, labelled by path position.
    pub fn from_path(path: &LambdaPath) -> Vec<ModelPerturbation> {
        path.values
            .iter()
            .enumerate()
            .map(|(k, &lambda)| ModelPerturbation { lambda, model_id: format!("lambda[{k}]") })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationPlan {
    pub data_perturbations: Vec<DataPerturbation>,
    pub model_perturbations: Vec<ModelPerturbation>,
}

impl PerturbationPlan {
    pub fn bootstrap_count(&self) -> usize {
        self.data_perturbations.iter().filter(|d| matches!(d.kind, DataPerturbationKind::Bootstrap(_))).count()
    }
}

/// Draws `n` rows with replacement; each row keeps its response entry.
pub fn bootstrap_sample(data: &DataMatrix, seed: &SeedSpec) -> Result<DataMatrix> {
    let n = data.n();
    let mut rng = seed.stream("bootstrap-rows", &[]);
    let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    data.select_rows(&rows)
}

pub fn generate_null_data(data: &DataMatrix, spec: &NullSpec) -> Result<DataMatrix> {
    match spec.kind {
        NullKind::PermuteResponse => {
            let mut y = data.y().to_vec();
            y.shuffle(&mut spec.seed.stream("null-permute", &[]));
            data.with_response(Array1::from(y))
        }
        NullKind::GaussianParametric { mean, sd } => {
            let normal = gaussian(mean, sd)?;
            let mut rng = spec.seed.stream("null-gaussian", &[]);
            let y: Array1<f64> = (0..data.n()).map(|_| normal.sample(&mut rng)).collect();
            data.with_response(y)
        }
    }
}

fn gaussian(mean: f64, sd: f64) -> Result<Normal<f64>> {
    if !(sd > 0.0) || !sd.is_finite() || !mean.is_finite() {
        return Err(PcsError::BadSd(sd));
    }
    Normal::new(mean, sd).map_err(|_| PcsError::BadSd(sd))
}

pub fn apply_perturbation<'a>(data: &'a DataMatrix, pert: &DataPerturbation) -> Result<Cow<'a, DataMatrix>> {
    match &pert.kind {
        DataPerturbationKind::Identity => Ok(Cow::Borrowed(data)),
        DataPerturbationKind::Bootstrap(_) => bootstrap_sample(data, &pert.seed).map(Cow::Owned),
        DataPerturbationKind::NullConstrained(spec) => generate_null_data(data, spec).map(Cow::Owned),
    }
}

/// `b` bootstrap perturbations (seeds derived per replicate) and one model
/// perturbation per path value. A null spec, when given, is appended as an
/// extra data perturbation.
pub fn build_plan(path: &LambdaPath, b: usize, null: Option<NullSpec>, seed: &SeedSpec) -> Result<PerturbationPlan> {
    if b == 0 {
        return Err(PcsError::BadConfig("at least one bootstrap replicate is required".into()));
    }
    if let Some(NullSpec { kind: NullKind::GaussianParametric { sd, .. }, .. }) = null {
        gaussian(0.0, sd)?;
    }
    let mut data_perturbations: Vec<DataPerturbation> = (1..=b)
        .map(|r| DataPerturbation {
            kind: DataPerturbationKind::Bootstrap(r),
            seed: seed.child("bootstrap", &[r as u64]),
        })
        .collect();
    if let Some(spec) = null {
        data_perturbations.push(DataPerturbation { kind: DataPerturbationKind::NullConstrained(spec), seed: spec.seed });
    }
    Ok(PerturbationPlan { data_perturbations, model_perturbations: ModelPerturbation::from_path(path) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::mean_sd;
    use ndarray::Array2;
    use std::collections::HashSet;

    fn tagged(n: usize) -> DataMatrix {
        // Column 0 is a sentinel equal to the row index; y = 10 * row index.
        let x = Array2::from_shape_fn((n, 2), |(i, j)| if j == 0 { i as f64 } else { (i * i) as f64 });
        let y = Array1::from_shape_fn(n, |i| 10.0 * i as f64);
        DataMatrix::from_arrays(x, y).unwrap()
    }

    fn sorted(v: &Array1<f64>) -> Vec<f64> {
        let mut v = v.to_vec();
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn bootstrap_rows_travel_jointly() {
        let d = tagged(50);
        let s = bootstrap_sample(&d, &SeedSpec::new(3)).unwrap();
        assert_eq!(s.n(), 50);
        for i in 0..s.n() {
            let row = s.x()[[i, 0]];
            assert_eq!(s.y()[i], 10.0 * row);
            assert_eq!(s.x()[[i, 1]], row * row);
        }
        assert_eq!(s, bootstrap_sample(&d, &SeedSpec::new(3)).unwrap());
        assert_ne!(s, bootstrap_sample(&d, &SeedSpec::new(4)).unwrap());
    }

    #[test]
    fn bootstrap_distinct_fraction() {
        let d = tagged(1000);
        let mut total = 0.0;
        for s in 0..200 {
            let sample = bootstrap_sample(&d, &SeedSpec::new(s)).unwrap();
            let distinct: HashSet<u64> = sample.x().column(0).iter().map(|v| *v as u64).collect();
            total += distinct.len() as f64 / 1000.0;
        }
        let mean = total / 200.0;
        assert!((0.61..=0.66).contains(&mean), "mean distinct fraction {mean}");
    }

    #[test]
    fn identity_returns_input() {
        let d = tagged(5);
        let out = apply_perturbation(&d, &DataPerturbation::identity()).unwrap();
        assert!(matches!(out, Cow::Borrowed(_)));
        assert_eq!(*out, d);
    }

    #[test]
    fn bootstrap_perturbation_delegates() {
        let d = tagged(20);
        let seed = SeedSpec::new(77);
        let pert = DataPerturbation { kind: DataPerturbationKind::Bootstrap(1), seed };
        assert_eq!(*apply_perturbation(&d, &pert).unwrap(), bootstrap_sample(&d, &seed).unwrap());
    }

    #[test]
    fn permuted_null_preserves_marginals() {
        let d = tagged(40);
        let spec = NullSpec { kind: NullKind::PermuteResponse, seed: SeedSpec::new(9) };
        let pert = DataPerturbation { kind: DataPerturbationKind::NullConstrained(spec), seed: spec.seed };
        let null = apply_perturbation(&d, &pert).unwrap();
        assert_eq!(null.x(), d.x());
        assert_eq!(sorted(null.y()), sorted(d.y()));
        assert_ne!(null.y(), d.y());
    }

    #[test]
    fn permutation_of_single_value_is_identity() {
        let mut y = vec![3.0];
        y.shuffle(&mut SeedSpec::new(1).rng());
        assert_eq!(y, vec![3.0]);
        // Two equal values: every permutation is the identity on content.
        let d = DataMatrix::from_arrays(Array2::from_shape_fn((2, 1), |(i, _)| i as f64), Array1::from(vec![2.0, 2.0]))
            .unwrap();
        let spec = NullSpec { kind: NullKind::PermuteResponse, seed: SeedSpec::new(1) };
        assert_eq!(generate_null_data(&d, &spec).unwrap(), d);
    }

    #[test]
    fn gaussian_null_moments() {
        let x = Array2::zeros((10_000, 1));
        let d = DataMatrix::from_arrays(x, Array1::zeros(10_000)).unwrap();
        let spec = NullSpec { kind: NullKind::GaussianParametric { mean: 0.0, sd: 1.0 }, seed: SeedSpec::new(2) };
        let null = generate_null_data(&d, &spec).unwrap();
        let (m, sd) = mean_sd(null.y().view());
        assert!(m.abs() < 0.05);
        assert!((0.96..=1.04).contains(&sd));
        let bad = NullSpec { kind: NullKind::GaussianParametric { mean: 0.0, sd: 0.0 }, seed: SeedSpec::new(2) };
        assert!(matches!(generate_null_data(&d, &bad), Err(PcsError::BadSd(_))));
    }

    fn path(k: usize) -> LambdaPath {
        LambdaPath { values: (0..k).map(|i| 1.0 / (i + 1) as f64).collect(), nlambda: k, min_ratio: 0.01 }
    }

    #[test]
    fn plan_shapes() {
        let plan = build_plan(&path(100), 100, None, &SeedSpec::new(1)).unwrap();
        assert_eq!(plan.data_perturbations.len(), 100);
        assert_eq!(plan.model_perturbations.len(), 100);
        assert_eq!(plan.bootstrap_count(), 100);
        let tiny = build_plan(&path(1), 1, None, &SeedSpec::new(1)).unwrap();
        assert_eq!((tiny.data_perturbations.len(), tiny.model_perturbations.len()), (1, 1));
        assert!(build_plan(&path(1), 0, None, &SeedSpec::new(1)).is_err());
    }

    #[test]
    fn plan_seeds_are_distinct() {
        let plan = build_plan(&path(3), 5000, None, &SeedSpec::new(8)).unwrap();
        let seeds: HashSet<u64> = plan.data_perturbations.iter().map(|d| d.seed.master_seed()).collect();
        assert_eq!(seeds.len(), 5000);
        assert_eq!(plan, build_plan(&path(3), 5000, None, &SeedSpec::new(8)).unwrap());
    }
}
