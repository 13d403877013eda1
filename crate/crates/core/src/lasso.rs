//! Lasso fitting by cyclic coordinate descent.
//!
//! Minimizes `(1/2n)||y - b0 - X b||^2 + lambda ||b||_1` with an unpenalized
//! intercept handled by centering. Columns are used on the scale they are
//! given in; callers standardize beforehand.

use std::fmt;

use ndarray::{Array1, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::error::{PcsError, Result};

pub const DEFAULT_NLAMBDA: usize = 100;
/// Stop when no coefficient moves more than this in a sweep.
pub const CONVERGENCE_TOL: f64 = 1e-7;
pub const MAX_SWEEPS: usize = 100_000;
pub const DEFAULT_SELECTION_TOL: f64 = 1e-8;

/// Smallest penalty as a fraction of `lambda_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MinRatio {
    Value(f64),
    Auto(AutoTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoTag {
    Auto,
}

impl MinRatio {
    pub const AUTO: MinRatio = MinRatio::Auto(AutoTag::Auto);

    /// glmnet's rule: 1e-4 when n > p, otherwise 1e-2.
    pub fn resolve(self, n: usize, p: usize) -> f64 {
        match self {
            MinRatio::Value(v) => v,
            MinRatio::Auto(_) => {
                if n > p {
                    1e-4
                } else {
                    1e-2
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaPath {
    pub values: Vec<f64>,
    pub nlambda: usize,
    pub min_ratio: f64,
}

impl LambdaPath {
    pub fn lambda_max(&self) -> f64 {
        self.values[0]
    }
}

/// Sorted set of selected feature indices (0-based). The intercept never appears.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureSet(Vec<usize>);

impl FeatureSet {
    pub fn new(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        FeatureSet(indices)
    }

    pub fn contains(&self, j: usize) -> bool {
        self.0.binary_search(&j).is_ok()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

impl FromIterator<usize> for FeatureSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        FeatureSet::new(iter.into_iter().collect())
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, j) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{j}")?;
        }
        write!(f, "}}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoFit {
    pub beta: Vec<f64>,
    pub intercept: f64,
    pub lambda: f64,
    pub converged: bool,
    /// Number of coordinate sweeps performed.
    pub iterations: usize,
}

/// Centered, column-major copy of the training data.
struct Design {
    n: usize,
    p: usize,
    cols: Vec<f64>,
    x_mean: Vec<f64>,
    /// `||x_j - mean||^2 / n`
    col_scale: Vec<f64>,
    y: Vec<f64>,
    y_mean: f64,
}

impl Design {
    fn new(data: &DataMatrix) -> Self {
        let (n, p) = (data.n(), data.p());
        let nf = n as f64;
        let mut cols = Vec::with_capacity(n * p);
        let mut x_mean = Vec::with_capacity(p);
        let mut col_scale = Vec::with_capacity(p);
        for col in data.x().columns() {
            let mean = col.sum() / nf;
            let start = cols.len();
            cols.extend(col.iter().map(|v| v - mean));
            let ss: f64 = cols[start..].iter().map(|v| v * v).sum();
            x_mean.push(mean);
            col_scale.push(ss / nf);
        }
        let y_mean = data.y().sum() / nf;
        let y = data.y().iter().map(|v| v - y_mean).collect();
        Design { n, p, cols, x_mean, col_scale, y, y_mean }
    }

    fn col(&self, j: usize) -> &[f64] {
        &self.cols[j * self.n..(j + 1) * self.n]
    }

    fn lambda_max(&self) -> f64 {
        let nf = self.n as f64;
        (0..self.p).map(|j| (dot(self.col(j), &self.y) / nf).abs()).fold(0.0, f64::max)
    }

    fn residual(&self, beta: &[f64]) -> Vec<f64> {
        let mut r = self.y.clone();
        for (j, &b) in beta.iter().enumerate() {
            if b != 0.0 {
                axpy(-b, self.col(j), &mut r);
            }
        }
        r
    }

    fn objective(&self, r: &[f64], beta: &[f64], lambda: f64) -> f64 {
        dot(r, r) / (2.0 * self.n as f64) + lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
    }

    /// One pass over `coords`; returns the largest absolute coefficient change.
    fn sweep(&self, coords: impl Iterator<Item = usize>, beta: &mut [f64], r: &mut [f64], lambda: f64) -> f64 {
        let nf = self.n as f64;
        let mut max_change = 0.0f64;
        for j in coords {
            let scale = self.col_scale[j];
            if scale <= 0.0 {
                beta[j] = 0.0;
                continue;
            }
            let old = beta[j];
            let rho = dot(self.col(j), r) / nf + scale * old;
            let new = soft_threshold(rho, lambda) / scale;
            if new != old {
                axpy(old - new, self.col(j), r);
                beta[j] = new;
                max_change = max_change.max((new - old).abs());
            }
        }
        max_change
    }

    fn fit(&self, lambda: f64, warm_start: Option<&[f64]>) -> LassoFit {
        let mut beta = match warm_start {
            Some(b) => b.to_vec(),
            None => vec![0.0; self.p],
        };
        let mut r = self.residual(&beta);
        let mut sweeps = 0usize;
        let mut converged = false;
        let mut last_objective = if cfg!(debug_assertions) { self.objective(&r, &beta, lambda) } else { 0.0 };
        let mut check = |beta: &[f64], r: &[f64]| {
            if cfg!(debug_assertions) {
                let obj = self.objective(r, beta, lambda);
                debug_assert!(
                    obj <= last_objective + 1e-12 * last_objective.abs().max(1.0),
                    "lasso objective increased: {last_objective} -> {obj}"
                );
                last_objective = obj;
            }
        };

        'outer: while sweeps < MAX_SWEEPS {
            let change = self.sweep(0..self.p, &mut beta, &mut r, lambda);
            sweeps += 1;
            check(&beta, &r);
            if change < CONVERGENCE_TOL {
                converged = true;
                break;
            }
            // Iterate on the current support until it settles, then re-check all coordinates.
            let active: Vec<usize> = (0..self.p).filter(|&j| beta[j] != 0.0).collect();
            loop {
                if sweeps >= MAX_SWEEPS {
                    break 'outer;
                }
                let change = self.sweep(active.iter().copied(), &mut beta, &mut r, lambda);
                sweeps += 1;
                check(&beta, &r);
                if change < CONVERGENCE_TOL {
                    break;
                }
            }
        }

        let intercept = self.y_mean - dot(&self.x_mean, &beta);
        LassoFit { beta, intercept, lambda, converged, iterations: sweeps }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Four independent partial sums let the compiler vectorize.
    let mut acc = [0.0f64; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (xa, xb) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += xa[k] * xb[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

/// `max_j |x_j^T (y - ybar)| / n`, the smallest penalty with an all-zero solution.
pub fn lambda_max(train: &DataMatrix) -> f64 {
    Design::new(train).lambda_max()
}

/// Log-spaced penalties from `lambda_max` down to `lambda_max * min_ratio`.
pub fn compute_lambda_path(train: &DataMatrix, nlambda: usize, min_ratio: MinRatio) -> Result<LambdaPath> {
    if nlambda == 0 {
        return Err(PcsError::BadConfig("nlambda must be at least 1".into()));
    }
    let ratio = min_ratio.resolve(train.n(), train.p());
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(PcsError::BadConfig(format!("min_ratio must lie in (0, 1), got {ratio}")));
    }
    let lmax = lambda_max(train);
    if !(lmax > 0.0) {
        return Err(PcsError::DegenerateResponse);
    }
    let values = if nlambda == 1 {
        vec![lmax]
    } else {
        let (hi, lo) = (lmax.ln(), (lmax * ratio).ln());
        let step = (lo - hi) / (nlambda - 1) as f64;
        (0..nlambda)
            .map(|k| if k == 0 { lmax } else if k == nlambda - 1 { lmax * ratio } else { (hi + step * k as f64).exp() })
            .collect()
    };
    Ok(LambdaPath { values, nlambda, min_ratio: ratio })
}

pub fn fit_lasso(train: &DataMatrix, lambda: f64, warm_start: Option<&[f64]>) -> Result<LassoFit> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(PcsError::BadConfig(format!("lambda must be finite and nonnegative, got {lambda}")));
    }
    if let Some(w) = warm_start {
        if w.len() != train.p() {
            return Err(PcsError::DimensionMismatch { expected: train.p(), got: w.len() });
        }
    }
    Ok(Design::new(train).fit(lambda, warm_start))
}

/// Fits every penalty of `lambdas` in the given order, warm-starting each from the previous fit.
pub fn fit_path(train: &DataMatrix, lambdas: &[f64]) -> Result<Vec<LassoFit>> {
    if let Some(bad) = lambdas.iter().find(|l| !(**l >= 0.0) || !l.is_finite()) {
        return Err(PcsError::BadConfig(format!("lambda must be finite and nonnegative, got {bad}")));
    }
    let design = Design::new(train);
    let mut fits: Vec<LassoFit> = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let warm = fits.last().map(|f| f.beta.as_slice());
        fits.push(design.fit(lambda, warm));
    }
    Ok(fits)
}

pub fn selected_features(fit: &LassoFit, tol: f64) -> FeatureSet {
    FeatureSet(fit.beta.iter().enumerate().filter(|(_, b)| b.abs() > tol).map(|(j, _)| j).collect())
}

pub fn predict(fit: &LassoFit, x_new: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
    if x_new.ncols() != fit.beta.len() {
        return Err(PcsError::DimensionMismatch { expected: fit.beta.len(), got: x_new.ncols() });
    }
    let beta = ArrayView1::from(fit.beta.as_slice());
    Ok(x_new.dot(&beta) + fit.intercept)
}

/// Mean squared prediction error.
pub fn l2_error(y_hat: &[f64], y: &[f64]) -> Result<f64> {
    if y_hat.len() != y.len() {
        return Err(PcsError::DimensionMismatch { expected: y.len(), got: y_hat.len() });
    }
    if y.is_empty() {
        return Err(PcsError::InvalidData("cannot score an empty prediction".into()));
    }
    Ok(y_hat.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y.len() as f64)
}

/// Largest violation of the lasso optimality conditions for `fit` on `train`.
pub fn kkt_violation(train: &DataMatrix, fit: &LassoFit) -> f64 {
    let n = train.n() as f64;
    let resid: Vec<f64> = train
        .x()
        .rows()
        .into_iter()
        .zip(train.y())
        .map(|(row, y)| y - fit.intercept - row.iter().zip(&fit.beta).map(|(a, b)| a * b).sum::<f64>())
        .collect();
    train
        .x()
        .columns()
        .into_iter()
        .zip(&fit.beta)
        .map(|(col, &b)| {
            let grad = col.iter().zip(&resid).map(|(a, r)| a * r).sum::<f64>() / n;
            if b != 0.0 {
                (grad - fit.lambda * b.signum()).abs()
            } else {
                (grad.abs() - fit.lambda).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}
