//! Replicated ROC comparison of stability scores against the OLS baseline.
//!
//! Each replicate simulates a dataset, runs the stability pipeline, and
//! computes baseline p-values by refitting OLS on the features the lasso
//! selects at the best-screened penalty of each half. Both methods are scored
//! against the same positives.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PcsError, Result};
use crate::eval::{auc_summary, average_roc, baseline_ols_pvalues, default_grid, roc_from_scores, RocCurve};
use crate::lasso::{fit_lasso, FeatureSet};
use crate::pcs::{run_pcs_detailed, PcsConfig, PcsRun};
use crate::seed::SeedSpec;
use crate::simgen::{simulate, GroundTruth, SimConfig, SimDataset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Pcs,
    OlsBaseline,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Pcs => "pcs",
            Method::OlsBaseline => "ols_baseline",
        }
    }
}

/// Per-feature ranking scores (higher = more likely active) for one replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateOutcome {
    pub pcs: Vec<f64>,
    pub baseline: Vec<f64>,
    pub positives: Vec<usize>,
    /// Active features hidden from the fit.
    pub unfindable: usize,
}

impl ReplicateOutcome {
    pub fn scores(&self, method: Method) -> &[f64] {
        match method {
            Method::Pcs => &self.pcs,
            Method::OlsBaseline => &self.baseline,
        }
    }

    /// ROC of `method`. With `count_unfindable`, hidden active features are
    /// appended as positives ranked below every visible feature.
    pub fn roc(&self, method: Method, count_unfindable: bool) -> Result<RocCurve> {
        let scores = self.scores(method);
        if !count_unfindable || self.unfindable == 0 {
            return roc_from_scores(scores, &self.positives, true);
        }
        let p = scores.len();
        let mut extended = scores.to_vec();
        extended.extend(std::iter::repeat(f64::NEG_INFINITY).take(self.unfindable));
        let mut positives = self.positives.clone();
        positives.extend(p..p + self.unfindable);
        roc_from_scores(&extended, &positives, true)
    }
}

/// Lasso selection at `lambda`, trimmed to the `max_size` largest coefficients.
fn baseline_selection(fit_beta: &[f64], tol: f64, max_size: usize) -> FeatureSet {
    let mut chosen: Vec<usize> = (0..fit_beta.len()).filter(|&j| fit_beta[j].abs() > tol).collect();
    if chosen.len() > max_size {
        chosen.sort_by(|&a, &b| fit_beta[b].abs().total_cmp(&fit_beta[a].abs()).then(a.cmp(&b)));
        chosen.truncate(max_size);
    }
    FeatureSet::new(chosen)
}

/// Baseline ranking scores `1 - p`, averaged over the halves of `run`.
pub fn baseline_scores(run: &PcsRun, selection_tol: f64) -> Result<Vec<f64>> {
    let p = run.report.scores.len();
    let mut total = vec![0.0; p];
    for half in &run.halves {
        let best = &half.screening.survivors[0];
        let fit = fit_lasso(&half.train, best.lambda, None)?;
        let selected = baseline_selection(&fit.beta, selection_tol, half.train.n().saturating_sub(2));
        let scores = baseline_ols_pvalues(&half.train, &selected)?.ranking_scores();
        for (t, s) in total.iter_mut().zip(scores) {
            *t += s;
        }
    }
    let k = run.halves.len() as f64;
    Ok(total.into_iter().map(|t| t / k).collect())
}

pub fn run_replicate(dataset: &SimDataset, pcs: &PcsConfig, seed: &SeedSpec) -> Result<ReplicateOutcome> {
    let run = run_pcs_detailed(&dataset.data, pcs, seed)?;
    let baseline = baseline_scores(&run, pcs.target.selection_tol)?;
    Ok(ReplicateOutcome {
        pcs: run.report.scores,
        baseline,
        positives: dataset.truth.fitted_visible_set.clone(),
        unfindable: unfindable_count(&dataset.truth),
    })
}

fn unfindable_count(truth: &GroundTruth) -> usize {
    truth.dropped.len()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkSpec {
    /// Template; each replicate overrides the seed.
    pub simulation: SimConfig,
    pub pcs: PcsConfig,
    pub replicates: usize,
    pub methods: Vec<Method>,
    pub grid_points: usize,
    /// Count active features removed before fitting as (never found) positives.
    pub count_dropped_as_positives: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub method: Method,
    pub curves: Vec<RocCurve>,
    pub average: RocCurve,
    pub auc_mean: f64,
    pub auc_sd: f64,
}

/// Summaries for `methods` over already-computed replicate outcomes.
pub fn summarize(outcomes: &[ReplicateOutcome], methods: &[Method], grid_points: usize, count_unfindable: bool) -> Result<Vec<MethodSummary>> {
    let grid = default_grid(grid_points);
    methods
        .iter()
        .map(|&method| {
            let curves: Vec<RocCurve> =
                outcomes.iter().map(|o| o.roc(method, count_unfindable)).collect::<Result<_>>()?;
            let average = average_roc(&curves, &grid)?;
            let (auc_mean, auc_sd) = auc_summary(&curves);
            Ok(MethodSummary { method, curves, average, auc_mean, auc_sd })
        })
        .collect()
}

/// Simulates and evaluates `spec.replicates` independent replicates.
pub fn run_benchmark(spec: &BenchmarkSpec, seed: &SeedSpec) -> Result<Vec<MethodSummary>> {
    if spec.replicates == 0 {
        return Err(PcsError::BadConfig("replicates must be at least 1".into()));
    }
    if spec.methods.is_empty() {
        return Err(PcsError::BadConfig("at least one method is required".into()));
    }
    if spec.grid_points < 2 {
        return Err(PcsError::BadConfig("grid_points must be at least 2".into()));
    }
    spec.pcs.validate()?;
    spec.simulation.validate()?;
    let outcomes: Vec<ReplicateOutcome> = (0..spec.replicates as u64)
        .into_par_iter()
        .map(|r| {
            let sim = SimConfig { seed: seed.child_seed("replicate-data", &[r]), ..spec.simulation.clone() };
            let dataset = simulate(&sim)?;
            run_replicate(&dataset, &spec.pcs, &seed.child("replicate-pcs", &[r]))
        })
        .collect::<Result<_>>()?;
    summarize(&outcomes, &spec.methods, spec.grid_points, spec.count_dropped_as_positives)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selection_trimming_keeps_largest() {
        let beta = [0.5, -2.0, 0.0, 1.0, 1e-12];
        assert_eq!(baseline_selection(&beta, 1e-8, 10), FeatureSet::new(vec![0, 1, 3]));
        assert_eq!(baseline_selection(&beta, 1e-8, 2), FeatureSet::new(vec![1, 3]));
    }

    #[test]
    fn unfindable_positives_lower_auc() {
        let outcome = ReplicateOutcome {
            pcs: vec![1.0, 0.9, 0.1, 0.0],
            baseline: vec![0.0; 4],
            positives: vec![0, 1],
            unfindable: 2,
        };
        assert_eq!(outcome.roc(Method::Pcs, false).unwrap().auc, 1.0);
        let counted = outcome.roc(Method::Pcs, true).unwrap();
        assert!((counted.auc - 0.5).abs() < 1e-12);
    }
}
