//! Run configurations read from JSON.
//!
//! Every field is required unless noted. Relative paths inside a config are
//! resolved against the directory holding the config file.

use std::path::{Path, PathBuf};

use pcs_core::benchmark::Method;
use pcs_core::digest::digest_of;
use pcs_core::simgen::{Design, Misspec, Noise, SimConfig};
use pcs_core::{NullKind, PcsConfig, Setting};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSource {
    pub path: PathBuf,
    /// Name of the response column.
    pub response: String,
    /// Center and scale every feature column on the full data before splitting.
    pub standardize: bool,
}

/// Simulation parameters. With `setting`, missing `noise` and `misspec` take
/// that setting's defaults; without it both are required.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationBlock {
    pub n: usize,
    pub design: Design,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub setting: Option<Setting>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<Noise>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub misspec: Option<Misspec>,
}

impl SimulationBlock {
    pub fn resolve(&self, seed: u64) -> CliResult<SimConfig> {
        let defaults = self.setting.map(|s| s.defaults(self.design.p()));
        let noise = self.noise.or(defaults.map(|d| d.0));
        let misspec = self.misspec.or(defaults.map(|d| d.1));
        let (Some(noise), Some(misspec)) = (noise, misspec) else {
            return Err(CliError::Config("simulation needs `setting` or both `noise` and `misspec`".into()));
        };
        let config = SimConfig { n: self.n, design: self.design, noise, misspec, seed };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub master_seed: u64,
    pub simulation: SimulationBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeConfig {
    pub master_seed: u64,
    pub data: DataSource,
    pub pcs: PcsConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HypotestConfig {
    pub master_seed: u64,
    pub data: DataSource,
    pub pcs: PcsConfig,
    pub null: NullKind,
}

/// Replicated ROC benchmark, either on fresh simulations per replicate or on
/// one dataset with its truth sidecar (then replicates differ only in the
/// perturbation seeds).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RocConfig {
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<DataSource>,
    /// `truth.json` written by `simulate`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<PathBuf>,
    pub pcs: PcsConfig,
    pub replicates: usize,
    pub methods: Vec<Method>,
    pub grid_points: usize,
    pub count_dropped_as_positives: bool,
}

impl RocConfig {
    pub fn check_source(&self) -> CliResult<()> {
        match (&self.simulation, &self.data, &self.truth) {
            (Some(_), None, None) | (None, Some(_), Some(_)) => Ok(()),
            _ => Err(CliError::Config("roc needs either `simulation` or both `data` and `truth`".into())),
        }
    }
}

/// Parses `text`, reporting the JSON path of the offending field on error.
pub fn parse<T: DeserializeOwned>(text: &str) -> CliResult<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path == "." {
            CliError::Config(inner.to_string())
        } else {
            CliError::Config(format!("{path}: {inner}"))
        }
    })
}

/// Reads and parses a config file; an unreadable file is a config error.
pub fn load<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse(&text)
}

/// Hex digest of the canonical JSON form of a resolved config.
pub fn config_digest<T: Serialize>(config: &T) -> CliResult<String> {
    Ok(digest_of(config)?)
}

pub fn resolve_path(base: Option<&Path>, path: &Path) -> PathBuf {
    match base {
        Some(dir) if path.is_relative() => dir.join(path),
        _ => path.to_path_buf(),
    }
}
