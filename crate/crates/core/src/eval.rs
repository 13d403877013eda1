//! ROC evaluation of feature rankings and the OLS p-value baseline.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::data::DataMatrix;
use crate::error::{PcsError, Result};
use crate::lasso::FeatureSet;
use crate::linalg::PivotedCholesky;

pub const DEFAULT_GRID_POINTS: usize = 101;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// `(fpr, tpr)` pairs from `(0, 0)` to `(1, 1)`.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

impl RocCurve {
    fn from_points(points: Vec<(f64, f64)>) -> Self {
        let auc = trapezoid(&points);
        RocCurve { points, auc }
    }

    /// TPR at `fpr`, interpolating linearly between neighbouring points. On a
    /// vertical segment the largest TPR at that FPR is returned.
    pub fn tpr_at(&self, fpr: f64) -> f64 {
        let exact = self.points.iter().filter(|pt| pt.0 == fpr).map(|pt| pt.1).fold(f64::NEG_INFINITY, f64::max);
        if exact.is_finite() {
            return exact;
        }
        self.points
            .windows(2)
            .find(|w| w[0].0 < fpr && fpr < w[1].0)
            .map(|w| {
                let ((f0, t0), (f1, t1)) = (w[0], w[1]);
                t0 + (fpr - f0) / (f1 - f0) * (t1 - t0)
            })
            .unwrap_or(1.0)
    }
}

pub fn trapezoid(points: &[(f64, f64)]) -> f64 {
    points.windows(2).map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0).sum()
}

/// ROC of the ranking given by `scores` against the positive set `truth`.
/// Features with equal scores enter together.
pub fn roc_from_scores(scores: &[f64], truth: &[usize], higher_is_positive: bool) -> Result<RocCurve> {
    let p = scores.len();
    let mut is_pos = vec![false; p];
    for &j in truth {
        if j >= p {
            return Err(PcsError::DimensionMismatch { expected: p, got: j + 1 });
        }
        is_pos[j] = true;
    }
    let n_pos = is_pos.iter().filter(|&&b| b).count();
    let n_neg = p - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(PcsError::DegenerateTruth);
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(PcsError::InvalidData("NaN score".into()));
    }
    let key = |j: usize| if higher_is_positive { scores[j] } else { -scores[j] };
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| key(b).total_cmp(&key(a)));

    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut k = 0;
    while k < p {
        let level = key(order[k]);
        while k < p && key(order[k]) == level {
            if is_pos[order[k]] {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        points.push((fp as f64 / n_neg as f64, tp as f64 / n_pos as f64));
    }
    Ok(RocCurve::from_points(points))
}

/// `m` equispaced FPR values from 0 to 1.
pub fn default_grid(m: usize) -> Vec<f64> {
    match m {
        0 => Vec::new(),
        1 => vec![1.0],
        _ => (0..m).map(|k| k as f64 / (m - 1) as f64).collect(),
    }
}

/// Vertical averaging: mean TPR of the curves at each grid FPR. The result is
/// anchored at `(0, 0)` and `(1, 1)`.
pub fn average_roc(curves: &[RocCurve], grid: &[f64]) -> Result<RocCurve> {
    if curves.is_empty() {
        return Err(PcsError::InvalidData("no curves to average".into()));
    }
    if grid.is_empty() || grid.iter().any(|f| !(0.0..=1.0).contains(f)) || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(PcsError::BadConfig("FPR grid must be strictly increasing within [0, 1]".into()));
    }
    let k = curves.len() as f64;
    let mut points: Vec<(f64, f64)> =
        grid.iter().map(|&f| (f, curves.iter().map(|c| c.tpr_at(f)).sum::<f64>() / k)).collect();
    if points[0] != (0.0, 0.0) {
        points.insert(0, (0.0, 0.0));
    }
    if *points.last().expect("non-empty") != (1.0, 1.0) {
        points.push((1.0, 1.0));
    }
    Ok(RocCurve::from_points(points))
}

/// Mean and sample standard deviation of curve AUCs.
pub fn auc_summary(curves: &[RocCurve]) -> (f64, f64) {
    let n = curves.len() as f64;
    let mean = curves.iter().map(|c| c.auc).sum::<f64>() / n;
    let var = if curves.len() > 1 {
        curves.iter().map(|c| (c.auc - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineScores {
    /// Two-sided p-value per feature; 1 for features outside the fitted set.
    pub pvalues: Vec<f64>,
    pub method: String,
    /// Selected features removed as collinear with lower-indexed ones.
    pub dropped: Vec<usize>,
}

impl BaselineScores {
    /// `1 - p`, so larger means stronger evidence.
    pub fn ranking_scores(&self) -> Vec<f64> {
        self.pvalues.iter().map(|p| 1.0 - p).collect()
    }
}

/// OLS of `y` on the selected columns (with intercept) and two-sided t-test
/// p-values with `n - k - 1` degrees of freedom.
pub fn baseline_ols_pvalues(train: &DataMatrix, selected: &FeatureSet) -> Result<BaselineScores> {
    let (n, p) = (train.n(), train.p());
    let cols: Vec<usize> = selected.iter().collect();
    if let Some(&j) = cols.iter().find(|&&j| j >= p) {
        return Err(PcsError::DimensionMismatch { expected: p, got: j + 1 });
    }
    let k = cols.len();
    let mut pvalues = vec![1.0; p];
    if k == 0 {
        return Ok(BaselineScores { pvalues, method: "ols_on_selected".into(), dropped: Vec::new() });
    }
    if k + 1 >= n {
        return Err(PcsError::InsufficientDof { selected: k, n });
    }

    let nf = n as f64;
    let centered: Vec<Vec<f64>> = cols
        .iter()
        .map(|&j| {
            let c = train.x().column(j);
            let m = c.sum() / nf;
            c.iter().map(|v| v - m).collect()
        })
        .collect();
    let y_mean = train.y().sum() / nf;
    let y: Vec<f64> = train.y().iter().map(|v| v - y_mean).collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| u * v).sum::<f64>();

    let mut gram = vec![0.0; k * k];
    for a in 0..k {
        for b in a..k {
            let v = dot(&centered[a], &centered[b]);
            gram[a * k + b] = v;
            gram[b * k + a] = v;
        }
    }
    let chol = PivotedCholesky::new(&gram, k);
    let xty: Vec<f64> = chol.kept.iter().map(|&a| dot(&centered[a], &y)).collect();
    let coef = chol.solve(&xty);

    let mut resid = y.clone();
    for (&a, &b) in chol.kept.iter().zip(&coef) {
        for (r, x) in resid.iter_mut().zip(&centered[a]) {
            *r -= b * x;
        }
    }
    let df = n - chol.rank() - 1;
    let sigma2 = dot(&resid, &resid) / df as f64;
    let inv_diag = chol.inverse_diagonal();
    let t_dist = StudentsT::new(0.0, 1.0, df as f64).map_err(|e| PcsError::Numerical(e.to_string()))?;
    for ((&a, &b), &d) in chol.kept.iter().zip(&coef).zip(&inv_diag) {
        let se = (sigma2 * d).sqrt();
        let pv = if se > 0.0 {
            (2.0 * t_dist.sf((b / se).abs())).clamp(0.0, 1.0)
        } else if b != 0.0 {
            0.0
        } else {
            1.0
        };
        pvalues[cols[a]] = pv;
    }
    let dropped: Vec<usize> = chol.dropped.iter().map(|&a| cols[a]).collect();
    if !dropped.is_empty() {
        log::debug!("baseline dropped collinear features {dropped:?}");
    }
    Ok(BaselineScores { pvalues, method: "ols_on_selected".into(), dropped })
}
