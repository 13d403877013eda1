//! Stability inference engine.
//!
//! The pipeline fits a lambda path on a training half, keeps the models whose
//! held-out (or cross-validated) error passes a screening rule, refits each
//! surviving penalty on every bootstrap resample, and reports how often each
//! feature is selected. With `swap_halves` the roles of the two halves are
//! exchanged and the per-feature scores averaged.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{split, swap_halves, DataMatrix};
use crate::digest::digest_of;
use crate::error::{PcsError, Result};
use crate::lasso::{
    compute_lambda_path, fit_path, l2_error, predict, selected_features, FeatureSet, LambdaPath, LassoFit,
    MinRatio,
};
use crate::perturb::{apply_perturbation, build_plan, generate_null_data, ModelPerturbation, NullSpec, PerturbationPlan};
use crate::seed::SeedSpec;

/// Key of the pooled selected-set-size interval in [`StabilityReport::intervals`].
pub const SELECTED_COUNT: &str = "selected_count";

// ---------------------------------------------------------------------------
// Configuration

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    LassoSelectedFeatures,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub kind: TargetKind,
    /// Coefficients with `|beta_j| > selection_tol` count as selected.
    pub selection_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathConfig {
    pub nlambda: usize,
    pub min_ratio: MinRatio,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationConfig {
    pub bootstrap_replicates: usize,
    pub lambda_path: PathConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    /// Fraction of observations held out for screening.
    pub fraction: f64,
    /// Run the pipeline on both halves and average the scores.
    pub swap_halves: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Mean squared prediction error.
    L2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScreeningRule {
    TopK(usize),
    /// Keep models whose error is strictly below the threshold.
    Threshold(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvaluationMode {
    Holdout,
    /// K-fold cross-validation on the training half.
    Cv(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScreeningConfig {
    pub rule: ScreeningRule,
    pub evaluation: EvaluationMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityMetricKind {
    SelectionFrequency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityMetricConfig {
    pub kind: StabilityMetricKind,
    /// Lower and upper percentiles of scalar perturbation intervals.
    pub interval_percentiles: [f64; 2],
    /// Also report one interval per surviving model, ranked by screening error.
    pub per_model_intervals: bool,
}

/// Everything a run needs, with no defaults: a missing field is a hard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PcsConfig {
    pub target: TargetConfig,
    pub perturbations: PerturbationConfig,
    pub split: SplitConfig,
    pub metric: Metric,
    pub screening: ScreeningConfig,
    pub stability_metric: StabilityMetricConfig,
}

impl PcsConfig {
    /// Holdout top-10 screening, 100 bootstraps, 100-value auto path, halves swapped.
    pub fn reference() -> Self {
        PcsConfig {
            target: TargetConfig { kind: TargetKind::LassoSelectedFeatures, selection_tol: crate::lasso::DEFAULT_SELECTION_TOL },
            perturbations: PerturbationConfig {
                bootstrap_replicates: 100,
                lambda_path: PathConfig { nlambda: crate::lasso::DEFAULT_NLAMBDA, min_ratio: MinRatio::AUTO },
            },
            split: SplitConfig { fraction: 0.5, swap_halves: true },
            metric: Metric::L2,
            screening: ScreeningConfig { rule: ScreeningRule::TopK(10), evaluation: EvaluationMode::Holdout },
            stability_metric: StabilityMetricConfig {
                kind: StabilityMetricKind::SelectionFrequency,
                interval_percentiles: [10.0, 90.0],
                per_model_intervals: false,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(PcsError::BadConfig(m.to_string()));
        if !(self.target.selection_tol >= 0.0) {
            return bad("target.selection_tol must be >= 0");
        }
        if self.perturbations.bootstrap_replicates == 0 {
            return bad("perturbations.bootstrap_replicates must be >= 1");
        }
        if self.perturbations.lambda_path.nlambda == 0 {
            return bad("perturbations.lambda_path.nlambda must be >= 1");
        }
        if let MinRatio::Value(r) = self.perturbations.lambda_path.min_ratio {
            if !(r > 0.0 && r < 1.0) {
                return bad("perturbations.lambda_path.min_ratio must lie in (0, 1)");
            }
        }
        if !(self.split.fraction > 0.0 && self.split.fraction < 1.0) {
            return bad("split.fraction must lie in (0, 1)");
        }
        match self.screening.rule {
            ScreeningRule::TopK(0) => return bad("screening.rule.top_k must be >= 1"),
            ScreeningRule::Threshold(t) if t.is_nan() => return bad("screening.rule.threshold must be a number"),
            _ => {}
        }
        if let EvaluationMode::Cv(k) = self.screening.evaluation {
            if k < 2 {
                return bad("screening.evaluation.cv needs at least 2 folds");
            }
        }
        let [lo, hi] = self.stability_metric.interval_percentiles;
        if !(0.0..=100.0).contains(&lo) || !(0.0..=100.0).contains(&hi) || lo > hi {
            return bad("stability_metric.interval_percentiles must satisfy 0 <= lo <= hi <= 100");
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Perturbation intervals

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn overlaps(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }
}

/// Linear interpolation between order statistics: with `m` sorted values and
/// `h = (m - 1) q`, returns `v[floor h] + frac(h) (v[floor h + 1] - v[floor h])`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let m = sorted.len();
    let h = (m - 1) as f64 * q;
    let lo = h.floor() as usize;
    if lo + 1 >= m {
        return sorted[m - 1];
    }
    sorted[lo] + (h - lo as f64) * (sorted[lo + 1] - sorted[lo])
}

pub fn perturbation_interval(values: &[f64], lo_pct: f64, hi_pct: f64) -> Result<Interval> {
    if values.is_empty() {
        return Err(PcsError::InvalidData("perturbation interval of an empty distribution".into()));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(PcsError::InvalidData("perturbation interval over NaN values".into()));
    }
    if !(0.0..=100.0).contains(&lo_pct) || !(0.0..=100.0).contains(&hi_pct) || lo_pct > hi_pct {
        return Err(PcsError::BadConfig(format!("invalid percentiles ({lo_pct}, {hi_pct})")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(Interval { lo: percentile(&sorted, lo_pct / 100.0), hi: percentile(&sorted, hi_pct / 100.0) })
}

// ---------------------------------------------------------------------------
// Screening

/// Where screening errors are measured.
#[derive(Debug, Clone, Copy)]
pub enum ScreeningEval<'a> {
    Holdout(&'a DataMatrix),
    Cv { folds: usize, seed: SeedSpec },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelError {
    pub model: ModelPerturbation,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningResult {
    /// Surviving models, best first.
    pub survivors: Vec<ModelPerturbation>,
    /// Error of every candidate, in candidate order.
    pub errors: Vec<ModelError>,
    pub rule: ScreeningRule,
    pub evaluation_mode: EvaluationMode,
}

impl ScreeningResult {
    pub fn error_of(&self, model_id: &str) -> Option<f64> {
        self.errors.iter().find(|e| e.model.model_id == model_id).map(|e| e.error)
    }
}

/// Fits `lambdas` on `train` (largest penalty first, warm-started) and returns
/// the fits in the order of `lambdas`.
fn fit_in_any_order(train: &DataMatrix, lambdas: &[f64]) -> Result<Vec<LassoFit>> {
    let mut order: Vec<usize> = (0..lambdas.len()).collect();
    order.sort_by(|&a, &b| lambdas[b].total_cmp(&lambdas[a]).then(a.cmp(&b)));
    let sorted: Vec<f64> = order.iter().map(|&k| lambdas[k]).collect();
    let fits = fit_path(train, &sorted)?;
    let mut out: Vec<Option<LassoFit>> = vec![None; lambdas.len()];
    for (k, fit) in order.into_iter().zip(fits) {
        out[k] = Some(fit);
    }
    Ok(out.into_iter().map(|f| f.expect("every slot filled")).collect())
}

fn holdout_errors(train: &DataMatrix, eval: &DataMatrix, lambdas: &[f64]) -> Result<Vec<f64>> {
    if eval.p() != train.p() {
        return Err(PcsError::DimensionMismatch { expected: train.p(), got: eval.p() });
    }
    let y = eval.y().as_slice().expect("owned response is contiguous").to_vec();
    fit_in_any_order(train, lambdas)?
        .iter()
        .map(|fit| {
            let y_hat = predict(fit, eval.x().view())?;
            l2_error(y_hat.as_slice().expect("contiguous prediction"), &y)
        })
        .collect()
}

/// Fold labels for `n` rows: a seeded shuffle dealt round-robin.
pub fn fold_assignment(n: usize, folds: usize, seed: &SeedSpec) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed.stream("cv-folds", &[]));
    let mut fold = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        fold[i] = pos % folds;
    }
    fold
}

fn cv_errors(train: &DataMatrix, folds: usize, seed: &SeedSpec, lambdas: &[f64]) -> Result<Vec<f64>> {
    if folds < 2 || folds > train.n() {
        return Err(PcsError::BadConfig(format!("cannot run {folds}-fold CV on {} observations", train.n())));
    }
    let assignment = fold_assignment(train.n(), folds, seed);
    let per_fold: Vec<Vec<f64>> = (0..folds)
        .into_par_iter()
        .map(|k| {
            let inside: Vec<usize> = (0..train.n()).filter(|&i| assignment[i] != k).collect();
            let held: Vec<usize> = (0..train.n()).filter(|&i| assignment[i] == k).collect();
            holdout_errors(&train.select_rows(&inside)?, &train.select_rows(&held)?, lambdas)
        })
        .collect::<Result<_>>()?;
    Ok((0..lambdas.len()).map(|m| per_fold.iter().map(|e| e[m]).sum::<f64>() / folds as f64).collect())
}

/// Ranks candidates by prediction error and applies `rule`. Exact ties are
/// resolved toward the larger penalty.
pub fn screen_models(
    candidates: &[ModelPerturbation],
    train: &DataMatrix,
    eval: ScreeningEval<'_>,
    rule: ScreeningRule,
) -> Result<ScreeningResult> {
    if candidates.is_empty() {
        return Err(PcsError::BadConfig("no candidate models to screen".into()));
    }
    let lambdas: Vec<f64> = candidates.iter().map(|c| c.lambda).collect();
    let (errors, evaluation_mode) = match eval {
        ScreeningEval::Holdout(test) => (holdout_errors(train, test, &lambdas)?, EvaluationMode::Holdout),
        ScreeningEval::Cv { folds, seed } => (cv_errors(train, folds, &seed, &lambdas)?, EvaluationMode::Cv(folds)),
    };
    if let Some(k) = errors.iter().position(|e| !e.is_finite()) {
        return Err(PcsError::Numerical(format!("non-finite prediction error for {}", candidates[k].model_id)));
    }
    let mut ranked: Vec<usize> = (0..candidates.len()).collect();
    ranked.sort_by(|&a, &b| {
        errors[a].total_cmp(&errors[b]).then(lambdas[b].total_cmp(&lambdas[a])).then(a.cmp(&b))
    });
    let chosen: Vec<usize> = match rule {
        ScreeningRule::TopK(0) => return Err(PcsError::BadConfig("top_k must be at least 1".into())),
        ScreeningRule::TopK(k) => ranked.into_iter().take(k).collect(),
        ScreeningRule::Threshold(tau) => ranked.into_iter().filter(|&m| errors[m] < tau).collect(),
    };
    if chosen.is_empty() {
        return Err(PcsError::EmptySurvivors);
    }
    Ok(ScreeningResult {
        survivors: chosen.iter().map(|&m| candidates[m].clone()).collect(),
        errors: candidates.iter().zip(&errors).map(|(model, &error)| ModelError { model: model.clone(), error }).collect(),
        rule,
        evaluation_mode,
    })
}

// ---------------------------------------------------------------------------
// Target distribution and stability scores

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetEntry {
    pub data_id: String,
    pub model_id: String,
    pub lambda: f64,
    pub features: FeatureSet,
    pub converged: bool,
}

/// Selected sets over the grid of data perturbations x surviving models,
/// stored data-perturbation-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetDistribution {
    pub entries: Vec<TargetEntry>,
    pub p: usize,
    pub n_data: usize,
    pub n_models: usize,
}

impl TargetDistribution {
    pub fn get(&self, data_index: usize, model_index: usize) -> &TargetEntry {
        &self.entries[data_index * self.n_models + model_index]
    }

    pub fn convergence_failures(&self) -> usize {
        self.entries.iter().filter(|e| !e.converged).count()
    }

    /// Per-feature selection counts.
    pub fn selection_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.p];
        for entry in &self.entries {
            for j in entry.features.iter() {
                counts[j] += 1;
            }
        }
        counts
    }

    /// Size of the selected set in every entry, grid order.
    pub fn selected_sizes(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.features.len() as f64).collect()
    }
}

/// Refits every surviving penalty on every perturbed dataset in `plan`.
///
/// One task per data perturbation: its survivors are fitted from the largest
/// penalty down, each warm-started from the previous fit. A task depends only
/// on its own inputs, so the result is the same for any thread count.
pub fn compute_target_distribution(
    train: &DataMatrix,
    survivors: &[ModelPerturbation],
    plan: &PerturbationPlan,
    selection_tol: f64,
) -> Result<TargetDistribution> {
    if survivors.is_empty() || plan.data_perturbations.is_empty() {
        return Err(PcsError::BadConfig("target distribution needs at least one data and one model perturbation".into()));
    }
    let rows: Vec<Vec<TargetEntry>> = plan
        .data_perturbations
        .par_iter()
        .map(|pert| {
            let perturbed = apply_perturbation(train, pert)?;
            let data_id = pert.id();
            let lambdas: Vec<f64> = survivors.iter().map(|m| m.lambda).collect();
            let fits = fit_in_any_order(&perturbed, &lambdas)?;
            Ok(survivors
                .iter()
                .zip(fits)
                .map(|(model, fit)| TargetEntry {
                    data_id: data_id.clone(),
                    model_id: model.model_id.clone(),
                    lambda: model.lambda,
                    features: selected_features(&fit, selection_tol),
                    converged: fit.converged,
                })
                .collect::<Vec<_>>())
        })
        .collect::<Result<_>>()?;
    let failures: usize = rows.iter().flatten().filter(|e| !e.converged).count();
    if failures > 0 {
        log::warn!("{failures} lasso fits hit the sweep limit without converging");
    }
    Ok(TargetDistribution {
        entries: rows.into_iter().flatten().collect(),
        p: train.p(),
        n_data: plan.data_perturbations.len(),
        n_models: survivors.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    /// Selection frequency of each feature, in `[0, 1]`.
    pub scores: Vec<f64>,
    pub feature_names: Vec<String>,
    pub intervals: BTreeMap<String, Interval>,
    pub config_digest: String,
    pub master_seed: u64,
    pub convergence_failures: usize,
    pub halves_averaged: bool,
    pub total_fits: usize,
}

/// `score_j = count_j / |entries|`: the fraction of (perturbation, model)
/// fits that select feature `j`.
pub fn stability_scores(dist: &TargetDistribution) -> Result<StabilityReport> {
    if dist.entries.is_empty() {
        return Err(PcsError::InvalidData("empty target distribution".into()));
    }
    let total = dist.entries.len() as f64;
    Ok(StabilityReport {
        scores: dist.selection_counts().into_iter().map(|c| c as f64 / total).collect(),
        feature_names: Vec::new(),
        intervals: BTreeMap::new(),
        config_digest: String::new(),
        master_seed: 0,
        convergence_failures: dist.convergence_failures(),
        halves_averaged: false,
        total_fits: dist.entries.len(),
    })
}

// ---------------------------------------------------------------------------
// Full pipeline

/// Intermediate products of one pass (one training half).
#[derive(Debug, Clone)]
pub struct HalfRun {
    pub train: DataMatrix,
    pub test: DataMatrix,
    pub path: LambdaPath,
    pub screening: ScreeningResult,
    pub distribution: TargetDistribution,
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct PcsRun {
    pub report: StabilityReport,
    pub halves: Vec<HalfRun>,
}

fn run_half(train: DataMatrix, test: DataMatrix, config: &PcsConfig, seed: &SeedSpec) -> Result<HalfRun> {
    let path_cfg = &config.perturbations.lambda_path;
    let path = compute_lambda_path(&train, path_cfg.nlambda, path_cfg.min_ratio)?;
    let candidates = ModelPerturbation::from_path(&path);
    let eval = match config.screening.evaluation {
        EvaluationMode::Holdout => ScreeningEval::Holdout(&test),
        EvaluationMode::Cv(folds) => ScreeningEval::Cv { folds, seed: seed.child("cv", &[]) },
    };
    let screening = screen_models(&candidates, &train, eval, config.screening.rule)?;
    let plan = build_plan(&path, config.perturbations.bootstrap_replicates, None, &seed.child("plan", &[]))?;
    let distribution = compute_target_distribution(&train, &screening.survivors, &plan, config.target.selection_tol)?;
    let scores = stability_scores(&distribution)?.scores;
    Ok(HalfRun { train, test, path, screening, distribution, scores })
}

fn interval_key(rank: usize, model: &ModelPerturbation) -> String {
    format!("{SELECTED_COUNT}[rank={rank},lambda={:.6e}]", model.lambda)
}

/// Runs the whole pipeline and keeps every intermediate product.
pub fn run_pcs_detailed(data: &DataMatrix, config: &PcsConfig, seed: &SeedSpec) -> Result<PcsRun> {
    config.validate()?;
    let split = split(data, config.split.fraction, &seed.child("split", &[]))?;
    let [first, second] = swap_halves(data, &split)?;
    let mut pairs = vec![first];
    if config.split.swap_halves {
        pairs.push(second);
    }
    let halves: Vec<HalfRun> = pairs
        .into_iter()
        .enumerate()
        .map(|(h, (train, test))| run_half(train, test, config, &seed.child("half", &[h as u64])))
        .collect::<Result<_>>()?;

    let p = data.p();
    let k = halves.len() as f64;
    let scores: Vec<f64> = (0..p).map(|j| halves.iter().map(|h| h.scores[j]).sum::<f64>() / k).collect();

    let [lo, hi] = config.stability_metric.interval_percentiles;
    let mut intervals = BTreeMap::new();
    let pooled: Vec<f64> = halves.iter().flat_map(|h| h.distribution.selected_sizes()).collect();
    intervals.insert(SELECTED_COUNT.to_string(), perturbation_interval(&pooled, lo, hi)?);
    if config.stability_metric.per_model_intervals {
        for (h, half) in halves.iter().enumerate() {
            for (rank, model) in half.screening.survivors.iter().enumerate() {
                let sizes: Vec<f64> = half
                    .distribution
                    .entries
                    .iter()
                    .filter(|e| e.model_id == model.model_id)
                    .map(|e| e.features.len() as f64)
                    .collect();
                let key = if halves.len() > 1 {
                    format!("half{}/{}", h + 1, interval_key(rank + 1, model))
                } else {
                    interval_key(rank + 1, model)
                };
                intervals.insert(key, perturbation_interval(&sizes, lo, hi)?);
            }
        }
    }

    let report = StabilityReport {
        scores,
        feature_names: data.feature_names().to_vec(),
        intervals,
        config_digest: digest_of(&(config, seed.master_seed()))?,
        master_seed: seed.master_seed(),
        convergence_failures: halves.iter().map(|h| h.distribution.convergence_failures()).sum(),
        halves_averaged: halves.len() > 1,
        total_fits: halves.iter().map(|h| h.distribution.entries.len()).sum(),
    };
    Ok(PcsRun { report, halves })
}

pub fn run_pcs(data: &DataMatrix, config: &PcsConfig, seed: &SeedSpec) -> Result<StabilityReport> {
    Ok(run_pcs_detailed(data, config, seed)?.report)
}

// ---------------------------------------------------------------------------
// Hypothesis testing

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Divergence {
    /// Observed score minus null score, per feature.
    pub score_difference: Vec<f64>,
    /// Whether each scalar interval overlaps its null counterpart.
    pub interval_overlap: BTreeMap<String, bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisTestResult {
    pub observed: StabilityReport,
    pub null: StabilityReport,
    pub divergence: Divergence,
}

/// Runs the identical pipeline (same seeds, same plan shape) on the observed
/// data and on `null_data`, and summarizes where they differ. No accept or
/// reject decision is made.
pub fn compare_with_null(data: &DataMatrix, null_data: &DataMatrix, config: &PcsConfig, seed: &SeedSpec) -> Result<HypothesisTestResult> {
    if data.p() != null_data.p() {
        return Err(PcsError::DimensionMismatch { expected: data.p(), got: null_data.p() });
    }
    let observed = run_pcs(data, config, seed)?;
    let null = run_pcs(null_data, config, seed)?;
    let score_difference = observed.scores.iter().zip(&null.scores).map(|(a, b)| a - b).collect();
    let interval_overlap = observed
        .intervals
        .iter()
        .filter_map(|(key, iv)| null.intervals.get(key).map(|other| (key.clone(), iv.overlaps(other))))
        .collect();
    Ok(HypothesisTestResult { observed, null, divergence: Divergence { score_difference, interval_overlap } })
}

/// Generates `D0` from `null` and compares it with the observed data.
pub fn pcs_hypothesis_test(data: &DataMatrix, null: &NullSpec, config: &PcsConfig, seed: &SeedSpec) -> Result<HypothesisTestResult> {
    let null_data = generate_null_data(data, null)?;
    compare_with_null(data, &null_data, config, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lasso::fit_lasso;
    use crate::data::standardize;
    use ndarray::{Array1, Array2};
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn signal_data(n: usize, p: usize, seed: u64) -> DataMatrix {
        let mut rng = SeedSpec::new(seed).rng();
        let x = Array2::from_shape_fn((n, p), |_| rng.sample::<f64, _>(StandardNormal));
        let y = Array1::from_shape_fn(n, |i| x[[i, 0]] + x[[i, 1]] + 0.5 * rng.sample::<f64, _>(StandardNormal));
        standardize(&DataMatrix::from_arrays(x, y).unwrap()).unwrap()
    }

    fn small_config() -> PcsConfig {
        let mut cfg = PcsConfig::reference();
        cfg.perturbations.bootstrap_replicates = 5;
        cfg.perturbations.lambda_path.nlambda = 20;
        cfg.screening.rule = ScreeningRule::TopK(3);
        cfg
    }

    #[test]
    fn percentile_examples() {
        let v: Vec<f64> = (1..=11).map(f64::from).collect();
        assert_eq!(perturbation_interval(&v, 10.0, 90.0).unwrap(), Interval { lo: 2.0, hi: 10.0 });
        assert_eq!(perturbation_interval(&[3.5; 7], 10.0, 90.0).unwrap(), Interval { lo: 3.5, hi: 3.5 });
        assert_eq!(perturbation_interval(&[4.0], 10.0, 90.0).unwrap(), Interval { lo: 4.0, hi: 4.0 });
        // h = 3 * 0.25 = 0.75 -> 1 + 0.75 * (2 - 1)
        assert_eq!(perturbation_interval(&[2.0, 1.0, 4.0, 3.0], 25.0, 100.0).unwrap(), Interval { lo: 1.75, hi: 4.0 });
        assert!(perturbation_interval(&[], 10.0, 90.0).is_err());
        assert!(perturbation_interval(&[1.0], 90.0, 10.0).is_err());
    }

    #[test]
    fn screening_top_k_and_threshold() {
        let d = signal_data(120, 8, 1);
        let split = split(&d, 0.5, &SeedSpec::new(2)).unwrap();
        let [(train, test), _] = swap_halves(&d, &split).unwrap();
        let path = compute_lambda_path(&train, 100, MinRatio::AUTO).unwrap();
        let cands = ModelPerturbation::from_path(&path);
        let top = screen_models(&cands, &train, ScreeningEval::Holdout(&test), ScreeningRule::TopK(10)).unwrap();
        assert_eq!(top.survivors.len(), 10);
        assert_eq!(top.errors.len(), 100);

        let all = screen_models(&cands, &train, ScreeningEval::Holdout(&test), ScreeningRule::Threshold(f64::INFINITY)).unwrap();
        assert_eq!(all.survivors.len(), 100);

        let tau = top.errors[50].error;
        let thr = screen_models(&cands, &train, ScreeningEval::Holdout(&test), ScreeningRule::Threshold(tau)).unwrap();
        for e in &thr.errors {
            let survived = thr.survivors.iter().any(|s| s.model_id == e.model.model_id);
            assert_eq!(survived, e.error < tau);
        }
        assert!(matches!(
            screen_models(&cands, &train, ScreeningEval::Holdout(&test), ScreeningRule::Threshold(0.0)),
            Err(PcsError::EmptySurvivors)
        ));
    }

    #[test]
    fn screening_ties_prefer_larger_lambda() {
        let d = signal_data(60, 4, 3);
        let split = split(&d, 0.5, &SeedSpec::new(2)).unwrap();
        let [(train, test), _] = swap_halves(&d, &split).unwrap();
        let lmax = crate::lasso::lambda_max(&train);
        // Both penalties give the all-zero model and therefore equal errors.
        let cands = vec![
            ModelPerturbation { lambda: lmax * 2.0, model_id: "a".into() },
            ModelPerturbation { lambda: lmax * 3.0, model_id: "b".into() },
        ];
        let res = screen_models(&cands, &train, ScreeningEval::Holdout(&test), ScreeningRule::TopK(1)).unwrap();
        assert_eq!(res.survivors[0].model_id, "b");
    }

    #[test]
    fn cv_screening_runs() {
        let d = signal_data(80, 5, 4);
        let path = compute_lambda_path(&d, 15, MinRatio::AUTO).unwrap();
        let cands = ModelPerturbation::from_path(&path);
        let res = screen_models(&cands, &d, ScreeningEval::Cv { folds: 5, seed: SeedSpec::new(1) }, ScreeningRule::TopK(4)).unwrap();
        assert_eq!(res.survivors.len(), 4);
        assert_eq!(res.evaluation_mode, EvaluationMode::Cv(5));
        let folds = fold_assignment(80, 5, &SeedSpec::new(1));
        for k in 0..5 {
            assert_eq!(folds.iter().filter(|&&f| f == k).count(), 16);
        }
    }

    #[test]
    fn degenerate_grid_matches_direct_fit() {
        let d = signal_data(50, 6, 5);
        let lambda = 0.1;
        let plan = PerturbationPlan {
            data_perturbations: vec![crate::perturb::DataPerturbation::identity()],
            model_perturbations: vec![],
        };
        let model = ModelPerturbation { lambda, model_id: "m".into() };
        let dist = compute_target_distribution(&d, std::slice::from_ref(&model), &plan, 1e-8).unwrap();
        assert_eq!(dist.entries.len(), 1);
        let direct = selected_features(&fit_lasso(&d, lambda, None).unwrap(), 1e-8);
        assert_eq!(dist.entries[0].features, direct);
    }

    #[test]
    fn scores_are_exact_frequencies() {
        let dist = TargetDistribution {
            entries: (0..4)
                .map(|k| TargetEntry {
                    data_id: format!("d{k}"),
                    model_id: "m".into(),
                    lambda: 1.0,
                    features: if k == 0 { FeatureSet::new(vec![0, 1]) } else { FeatureSet::new(vec![0]) },
                    converged: true,
                })
                .collect(),
            p: 3,
            n_data: 4,
            n_models: 1,
        };
        let rep = stability_scores(&dist).unwrap();
        assert_eq!(rep.scores, vec![1.0, 0.25, 0.0]);
    }

    #[test]
    fn pipeline_is_deterministic_and_bounded() {
        let d = signal_data(100, 6, 6);
        let cfg = small_config();
        let a = run_pcs(&d, &cfg, &SeedSpec::new(9)).unwrap();
        let b = run_pcs(&d, &cfg, &SeedSpec::new(9)).unwrap();
        assert_eq!(a, b);
        assert!(a.halves_averaged);
        assert_eq!(a.total_fits, 2 * 5 * 3);
        assert!(a.scores.iter().all(|s| (0.0..=1.0).contains(s)));
        assert!(a.scores[0] > 0.9 && a.scores[1] > 0.9);
    }

    #[test]
    fn single_fit_pipeline_lattice() {
        let d = signal_data(60, 5, 7);
        let mut cfg = small_config();
        cfg.perturbations.bootstrap_replicates = 1;
        cfg.screening.rule = ScreeningRule::TopK(1);
        let rep = run_pcs(&d, &cfg, &SeedSpec::new(1)).unwrap();
        for s in rep.scores {
            assert!(s == 0.0 || s == 0.5 || s == 1.0);
        }
    }

    #[test]
    fn per_model_intervals_are_reported() {
        let d = signal_data(60, 5, 8);
        let mut cfg = small_config();
        cfg.stability_metric.per_model_intervals = true;
        let rep = run_pcs(&d, &cfg, &SeedSpec::new(1)).unwrap();
        assert_eq!(rep.intervals.len(), 1 + 2 * 3);
        assert!(rep.intervals.contains_key(SELECTED_COUNT));
    }

    #[test]
    fn identical_null_gives_zero_divergence() {
        let d = signal_data(60, 5, 10);
        let res = compare_with_null(&d, &d, &small_config(), &SeedSpec::new(3)).unwrap();
        assert_eq!(res.observed, res.null);
        assert_eq!(res.divergence.score_difference.len(), 5);
        assert!(res.divergence.score_difference.iter().all(|&v| v == 0.0));
        assert!(res.divergence.interval_overlap.values().all(|&o| o));
    }

    #[test]
    fn config_rejects_bad_values() {
        let mut cfg = PcsConfig::reference();
        cfg.screening.rule = ScreeningRule::TopK(0);
        assert!(cfg.validate().is_err());
        let mut cfg = PcsConfig::reference();
        cfg.split.fraction = 1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = PcsConfig::reference();
        cfg.stability_metric.interval_percentiles = [90.0, 10.0];
        assert!(cfg.validate().is_err());
        assert!(PcsConfig::reference().validate().is_ok());
    }
}
