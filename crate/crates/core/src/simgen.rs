//! Synthetic sparse linear benchmarks.
//!
//! Base features are correlated log-normal columns (exchangeable Gaussian
//! correlation 0.3, exponentiated, standardized), augmented with every
//! pairwise product. A random `floor(sqrt(p))`-subset of columns is active
//! with unit coefficients and the response adds one of several noise models,
//! optionally with a misspecification.

use ndarray::{Array1, Array2, ArrayView2};
use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::data::{default_feature_names, standardize_columns, DataMatrix};
use crate::error::{PcsError, Result};
use crate::seed::SeedSpec;

/// Exchangeable correlation of the latent Gaussian behind the base features.
pub const BASE_CORRELATION: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Noise {
    Gaussian { sd: f64 },
    StudentT { df: f64 },
    /// Observations split into consecutive blocks with within-block correlation `rho`.
    BlockGaussian { block_size: usize, rho: f64, sd: f64 },
    /// Variance `c * ||x_i||^2`; `c` defaults to the value giving mean variance 1.
    Heteroskedastic {
        #[serde(default)]
        c: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Misspec {
    None,
    /// Remove `k` active columns before fitting.
    DropActive { k: usize },
    /// Response from products of threshold indicators over pairs of active features.
    RuleResponse {
        /// Number of disjoint pairs; defaults to `floor(s / 2)`.
        #[serde(default)]
        pairs: Option<usize>,
        #[serde(default = "unit")]
        coefficient: f64,
    },
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Design {
    /// `p_base` log-normal columns plus all `p_base choose 2` pairwise products.
    Interactions { p_base: usize },
    /// `p` independent standard Gaussian columns.
    Independent { p: usize },
}

impl Design {
    pub fn p(&self) -> usize {
        match *self {
            Design::Interactions { p_base } => p_base + p_base * p_base.saturating_sub(1) / 2,
            Design::Independent { p } => p,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub n: usize,
    pub design: Design,
    pub noise: Noise,
    pub misspec: Misspec,
    pub seed: u64,
}

impl SimConfig {
    pub fn p(&self) -> usize {
        self.design.p()
    }

    pub fn active_count(&self) -> usize {
        active_count(self.p())
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(PcsError::BadConfig(format!("n must be at least 2, got {}", self.n)));
        }
        match self.design {
            Design::Interactions { p_base } if p_base < 2 => {
                return Err(PcsError::BadConfig("p_base must be at least 2".into()))
            }
            Design::Independent { p } if p < 1 => return Err(PcsError::BadConfig("p must be at least 1".into())),
            _ => {}
        }
        validate_noise(&self.noise)?;
        let s = self.active_count();
        match self.misspec {
            Misspec::DropActive { k } if k > s => Err(PcsError::KTooLarge { k, active: s }),
            Misspec::RuleResponse { pairs, coefficient } => {
                let pairs = pairs.unwrap_or(s / 2);
                if pairs == 0 || 2 * pairs > s {
                    return Err(PcsError::BadConfig(format!("{pairs} disjoint rule pairs need 2 * pairs <= s = {s}")));
                }
                if !coefficient.is_finite() {
                    return Err(PcsError::BadConfig("rule coefficient must be finite".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

fn validate_noise(noise: &Noise) -> Result<()> {
    let bad = |m: String| Err(PcsError::BadConfig(m));
    match *noise {
        Noise::Gaussian { sd } if !(sd >= 0.0 && sd.is_finite()) => bad(format!("noise sd must be >= 0, got {sd}")),
        Noise::StudentT { df } if !(df > 0.0 && df.is_finite()) => bad(format!("df must be > 0, got {df}")),
        Noise::BlockGaussian { block_size, rho, sd } => {
            if block_size == 0 {
                bad("block_size must be positive".into())
            } else if !(0.0..1.0).contains(&rho) {
                bad(format!("rho must lie in [0, 1), got {rho}"))
            } else if !(sd >= 0.0 && sd.is_finite()) {
                bad(format!("noise sd must be >= 0, got {sd}"))
            } else {
                Ok(())
            }
        }
        Noise::Heteroskedastic { c: Some(c) } if !(c >= 0.0 && c.is_finite()) => {
            bad(format!("heteroskedastic constant must be >= 0, got {c}"))
        }
        _ => Ok(()),
    }
}

/// `floor(sqrt(p))`.
pub fn active_count(p: usize) -> usize {
    let mut s = (p as f64).sqrt() as usize;
    while s * s > p {
        s -= 1;
    }
    while (s + 1) * (s + 1) <= p {
        s += 1;
    }
    s
}

/// The six named benchmark settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    Gaussian,
    StudentT,
    BlockGaussian,
    Heteroskedastic,
    DropActive,
    RuleResponse,
}

impl Setting {
    pub const ALL: [Setting; 6] = [
        Setting::Gaussian,
        Setting::StudentT,
        Setting::BlockGaussian,
        Setting::Heteroskedastic,
        Setting::DropActive,
        Setting::RuleResponse,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Setting::Gaussian => "gaussian",
            Setting::StudentT => "student_t",
            Setting::BlockGaussian => "block_gaussian",
            Setting::Heteroskedastic => "heteroskedastic",
            Setting::DropActive => "drop_active",
            Setting::RuleResponse => "rule_response",
        }
    }

    pub fn from_name(name: &str) -> Option<Setting> {
        Setting::ALL.into_iter().find(|s| s.name() == name)
    }

    pub fn description(self) -> &'static str {
        match self {
            Setting::Gaussian => "i.i.d. Gaussian noise, sd 1",
            Setting::StudentT => "i.i.d. Student t noise, 3 degrees of freedom",
            Setting::BlockGaussian => "Gaussian noise, blocks of 25 observations with correlation 0.5",
            Setting::Heteroskedastic => "Gaussian noise with variance proportional to ||x_i||^2, mean variance 1",
            Setting::DropActive => "i.i.d. Gaussian noise, 12/25 of the active features hidden from the fit",
            Setting::RuleResponse => "response from threshold rules on pairs of active features plus Gaussian noise",
        }
    }

    /// Default noise and misspecification for this setting on a `p`-column design.
    pub fn defaults(self, p: usize) -> (Noise, Misspec) {
        let gaussian = Noise::Gaussian { sd: 1.0 };
        match self {
            Setting::Gaussian => (gaussian, Misspec::None),
            Setting::StudentT => (Noise::StudentT { df: 3.0 }, Misspec::None),
            Setting::BlockGaussian => (Noise::BlockGaussian { block_size: 25, rho: 0.5, sd: 1.0 }, Misspec::None),
            Setting::Heteroskedastic => (Noise::Heteroskedastic { c: None }, Misspec::None),
            Setting::DropActive => (gaussian, Misspec::DropActive { k: default_drop_count(active_count(p)) }),
            Setting::RuleResponse => (gaussian, Misspec::RuleResponse { pairs: None, coefficient: 1.0 }),
        }
    }

    pub fn config(self, n: usize, design: Design, seed: u64) -> SimConfig {
        let (noise, misspec) = self.defaults(design.p());
        SimConfig { n, design, noise, misspec, seed }
    }
}

/// Hidden active features: 12 of every 25, rounded half up.
pub fn default_drop_count(s: usize) -> usize {
    (24 * s + 25) / 50
}

/// A feature matrix without a response.
#[derive(Debug, Clone, PartialEq)]
pub struct Features {
    pub x: Array2<f64>,
    pub names: Vec<String>,
}

/// Base log-normal columns plus lexicographically ordered pairwise products,
/// every column standardized.
pub fn make_features(n: usize, p_base: usize, seed: &SeedSpec) -> Result<Features> {
    if p_base < 2 {
        return Err(PcsError::BadConfig("p_base must be at least 2".into()));
    }
    if n < 2 {
        return Err(PcsError::BadConfig("n must be at least 2".into()));
    }
    let mut rng = seed.stream("base-features", &[]);
    let shared_w = BASE_CORRELATION.sqrt();
    let own_w = (1.0 - BASE_CORRELATION).sqrt();
    let mut base = Array2::<f64>::zeros((n, p_base));
    for mut row in base.rows_mut() {
        let common: f64 = StandardNormal.sample(&mut rng);
        for v in row.iter_mut() {
            let own: f64 = StandardNormal.sample(&mut rng);
            *v = (shared_w * common + own_w * own).exp();
        }
    }
    standardize_columns(&mut base)?;

    let p = p_base + p_base * (p_base - 1) / 2;
    let mut x = Array2::<f64>::zeros((n, p));
    x.slice_mut(ndarray::s![.., ..p_base]).assign(&base);
    let mut names: Vec<String> = (1..=p_base).map(|j| format!("f{j}")).collect();
    let mut col = p_base;
    for j in 0..p_base {
        for k in (j + 1)..p_base {
            let prod = &base.column(j) * &base.column(k);
            x.column_mut(col).assign(&prod);
            names.push(format!("f{}:f{}", j + 1, k + 1));
            col += 1;
        }
    }
    standardize_columns(&mut x)?;
    Ok(Features { x, names })
}

/// `p` independent standard Gaussian columns, standardized.
pub fn make_independent_features(n: usize, p: usize, seed: &SeedSpec) -> Result<Features> {
    let mut rng = seed.stream("independent-features", &[]);
    let mut x = Array2::from_shape_simple_fn((n, p), || StandardNormal.sample(&mut rng));
    standardize_columns(&mut x)?;
    Ok(Features { x, names: default_feature_names(p) })
}

pub fn make_design(n: usize, design: Design, seed: &SeedSpec) -> Result<Features> {
    match design {
        Design::Interactions { p_base } => make_features(n, p_base, seed),
        Design::Independent { p } => make_independent_features(n, p, seed),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RulePair {
    pub members: [usize; 2],
    pub thresholds: [f64; 2],
    pub coefficient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleSet {
    pub pairs: Vec<RulePair>,
}

impl RuleSet {
    pub fn evaluate(&self, x: ArrayView2<'_, f64>) -> Array1<f64> {
        x.rows()
            .into_iter()
            .map(|row| {
                self.pairs
                    .iter()
                    .filter(|pair| pair.members.iter().zip(&pair.thresholds).all(|(&k, &t)| row[k] > t))
                    .map(|pair| pair.coefficient)
                    .sum()
            })
            .collect()
    }

    pub fn members(&self) -> Vec<usize> {
        let mut m: Vec<usize> = self.pairs.iter().flat_map(|p| p.members).collect();
        m.sort_unstable();
        m
    }
}

/// Which features generate the response and which of them the fit can see.
///
/// `active_set` and `beta` index the generating design. `kept_columns` maps
/// each column of the fitted matrix back to its generating index, and
/// `fitted_visible_set` holds fitted-matrix indices of the active features
/// that drive the response and were not removed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub active_set: Vec<usize>,
    pub beta: Vec<f64>,
    pub fitted_visible_set: Vec<usize>,
    pub kept_columns: Vec<usize>,
    pub dropped: Vec<usize>,
    pub rule_set: Option<RuleSet>,
}

impl GroundTruth {
    pub fn p_generating(&self) -> usize {
        self.beta.len()
    }

    pub fn p_fitted(&self) -> usize {
        self.kept_columns.len()
    }
}

/// Uniformly random `floor(sqrt(p))`-subset with unit coefficients.
pub fn assign_active(p: usize, seed: &SeedSpec) -> Result<GroundTruth> {
    if p == 0 {
        return Err(PcsError::BadConfig("p must be at least 1".into()));
    }
    let s = active_count(p);
    let mut active_set = index::sample(&mut seed.stream("active-set", &[]), p, s).into_vec();
    active_set.sort_unstable();
    let mut beta = vec![0.0; p];
    for &j in &active_set {
        beta[j] = 1.0;
    }
    Ok(GroundTruth {
        fitted_visible_set: active_set.clone(),
        active_set,
        beta,
        kept_columns: (0..p).collect(),
        dropped: Vec::new(),
        rule_set: None,
    })
}

/// Disjoint random pairs of active features with median thresholds.
pub fn build_rule_set(x: ArrayView2<'_, f64>, truth: &GroundTruth, pairs: usize, coefficient: f64, seed: &SeedSpec) -> Result<RuleSet> {
    if pairs == 0 || 2 * pairs > truth.active_set.len() {
        return Err(PcsError::BadConfig(format!(
            "{pairs} disjoint rule pairs need 2 * pairs <= {}",
            truth.active_set.len()
        )));
    }
    let mut pool = truth.active_set.clone();
    pool.shuffle(&mut seed.stream("rule-pairs", &[]));
    let pairs = pool
        .chunks_exact(2)
        .take(pairs)
        .map(|c| {
            let members = [c[0].min(c[1]), c[0].max(c[1])];
            RulePair { members, thresholds: members.map(|k| median(x.column(k).to_vec())), coefficient }
        })
        .collect();
    Ok(RuleSet { pairs })
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

/// Noise draws for `x` under `noise`.
pub fn draw_noise(x: ArrayView2<'_, f64>, noise: &Noise, seed: &SeedSpec) -> Result<Array1<f64>> {
    validate_noise(noise)?;
    let n = x.nrows();
    let mut rng = seed.stream("noise", &[]);
    let eps = match *noise {
        Noise::Gaussian { sd } => (0..n).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect(),
        Noise::StudentT { df } => {
            let t = StudentT::new(df).map_err(|e| PcsError::BadConfig(e.to_string()))?;
            (0..n).map(|_| t.sample(&mut rng)).collect()
        }
        Noise::BlockGaussian { block_size, rho, sd } => {
            let (shared_w, own_w) = (rho.sqrt(), (1.0 - rho).sqrt());
            let mut eps = Array1::zeros(n);
            for mut block in eps.exact_chunks_mut(block_size).into_iter() {
                let common: f64 = StandardNormal.sample(&mut rng);
                for v in block.iter_mut() {
                    let own: f64 = StandardNormal.sample(&mut rng);
                    *v = sd * (shared_w * common + own_w * own);
                }
            }
            let tail = n % block_size;
            if tail > 0 {
                let common: f64 = StandardNormal.sample(&mut rng);
                for v in eps.iter_mut().skip(n - tail) {
                    let own: f64 = StandardNormal.sample(&mut rng);
                    *v = sd * (shared_w * common + own_w * own);
                }
            }
            eps
        }
        Noise::Heteroskedastic { c } => {
            let norms: Vec<f64> = x.rows().into_iter().map(|r| r.dot(&r)).collect();
            let c = c.unwrap_or_else(|| {
                let mean = norms.iter().sum::<f64>() / n as f64;
                if mean > 0.0 {
                    1.0 / mean
                } else {
                    0.0
                }
            });
            norms.iter().map(|&norm| (c * norm).sqrt() * rng.sample::<f64, _>(StandardNormal)).collect()
        }
    };
    Ok(eps)
}

/// Signal plus noise. Under a rule misspecification the signal comes from
/// `truth.rule_set`; otherwise it is `x beta`.
pub fn gen_response(x: ArrayView2<'_, f64>, truth: &GroundTruth, config: &SimConfig, seed: &SeedSpec) -> Result<Array1<f64>> {
    if x.ncols() != truth.beta.len() {
        return Err(PcsError::DimensionMismatch { expected: truth.beta.len(), got: x.ncols() });
    }
    let signal = match config.misspec {
        Misspec::RuleResponse { .. } => truth
            .rule_set
            .as_ref()
            .ok_or_else(|| PcsError::BadConfig("rule response requires a rule set".into()))?
            .evaluate(x),
        _ => x.dot(&Array1::from(truth.beta.clone())),
    };
    Ok(signal + draw_noise(x, &config.noise, seed)?)
}

/// Removes `k` random active columns from `data`.
pub fn apply_misspec_drop(data: &DataMatrix, truth: &GroundTruth, k: usize, seed: &SeedSpec) -> Result<(DataMatrix, GroundTruth)> {
    let visible: Vec<usize> = truth.fitted_visible_set.iter().map(|&j| truth.kept_columns[j]).collect();
    if k > visible.len() {
        return Err(PcsError::KTooLarge { k, active: visible.len() });
    }
    if k == 0 {
        return Ok((data.clone(), truth.clone()));
    }
    let mut dropped: Vec<usize> =
        index::sample(&mut seed.stream("drop-active", &[]), visible.len(), k).into_iter().map(|i| visible[i]).collect();
    dropped.sort_unstable();
    let kept_columns: Vec<usize> = truth.kept_columns.iter().copied().filter(|j| dropped.binary_search(j).is_err()).collect();
    let positions: Vec<usize> = kept_columns
        .iter()
        .map(|g| truth.kept_columns.iter().position(|k| k == g).expect("kept column exists"))
        .collect();
    let reduced = data.select_columns(&positions)?;
    let fitted_visible_set = kept_columns
        .iter()
        .enumerate()
        .filter(|(_, g)| visible.contains(g))
        .map(|(i, _)| i)
        .collect();
    let mut all_dropped = truth.dropped.clone();
    all_dropped.extend(dropped);
    all_dropped.sort_unstable();
    let new_truth = GroundTruth { fitted_visible_set, kept_columns, dropped: all_dropped, ..truth.clone() };
    Ok((reduced, new_truth))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimDataset {
    pub data: DataMatrix,
    pub truth: GroundTruth,
}

/// Generates `(x, y, truth)` as a pure function of `config`.
pub fn simulate(config: &SimConfig) -> Result<SimDataset> {
    config.validate()?;
    let seed = SeedSpec::new(config.seed);
    let features = make_design(config.n, config.design, &seed.child("features", &[]))?;
    let mut truth = assign_active(features.x.ncols(), &seed.child("active", &[]))?;
    if let Misspec::RuleResponse { pairs, coefficient } = config.misspec {
        let pairs = pairs.unwrap_or(truth.active_set.len() / 2);
        let rules = build_rule_set(features.x.view(), &truth, pairs, coefficient, &seed.child("rules", &[]))?;
        truth.fitted_visible_set = rules.members();
        truth.rule_set = Some(rules);
    }
    let y = gen_response(features.x.view(), &truth, config, &seed.child("response", &[]))?;
    let data = DataMatrix::new(features.x, y, features.names)?.assume_standardized();
    match config.misspec {
        Misspec::DropActive { k } => {
            let (data, truth) = apply_misspec_drop(&data, &truth, k, &seed.child("drop", &[]))?;
            Ok(SimDataset { data, truth })
        }
        _ => Ok(SimDataset { data, truth }),
    }
}

/// Sample kurtosis `m4 / m2^2` (3 for a Gaussian).
#[cfg(test)]
fn kurtosis(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let m2 = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    let m4 = v.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
    m4 / (m2 * m2)
}
