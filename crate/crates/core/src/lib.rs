//! Perturbation-based stability inference for sparse linear models.
//!
//! The crate fits lasso paths by coordinate descent, screens penalties by
//! held-out prediction error, refits the survivors on bootstrap resamples,
//! and scores each feature by how often it is selected. It also ships a
//! synthetic benchmark generator, a permutation/parametric null comparison,
//! and ROC tooling to compare the scores against an OLS p-value baseline.

pub mod benchmark;
pub mod data;
pub mod digest;
pub mod error;
pub mod eval;
pub mod lasso;
mod linalg;
pub mod pcs;
pub mod perturb;
pub mod seed;
pub mod simgen;

pub use data::{standardize, DataMatrix, TrainTestSplit};
pub use error::{ErrorKind, PcsError, Result};
pub use eval::{BaselineScores, RocCurve};
pub use lasso::{FeatureSet, LambdaPath, LassoFit, MinRatio};
pub use pcs::{
    HypothesisTestResult, PcsConfig, ScreeningResult, ScreeningRule, StabilityReport, TargetDistribution,
};
pub use perturb::{DataPerturbation, ModelPerturbation, NullKind, NullSpec, PerturbationPlan};
pub use seed::SeedSpec;
pub use simgen::{GroundTruth, Setting, SimConfig};
