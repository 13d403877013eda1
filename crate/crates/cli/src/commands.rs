//! The subcommands. Each resolves its config (applying `--seed`), validates
//! it in full, computes the config digest, and only then touches data.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use pcs_core::benchmark::{run_replicate, run_benchmark, summarize, BenchmarkSpec, MethodSummary, ReplicateOutcome};
use pcs_core::data::{format_float, read_csv_path, standardize, write_csv};
use pcs_core::pcs::{pcs_hypothesis_test, run_pcs, Divergence};
use pcs_core::simgen::{simulate as simulate_data, Design, SimConfig, SimDataset};
use pcs_core::{DataMatrix, GroundTruth, NullSpec, PcsError, SeedSpec, Setting, StabilityReport};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{
    config_digest, load, resolve_path, AnalyzeConfig, DataSource, HypotestConfig, RocConfig, SimulateConfig,
    SimulationBlock,
};
use crate::docgen;
use crate::error::{CliError, CliResult};

pub const DATA_FILE: &str = "data.csv";
pub const TRUTH_FILE: &str = "truth.json";
pub const REPORT_FILE: &str = "report.json";
pub const HYPOTEST_FILE: &str = "hypotest.json";
pub const ROC_SUMMARY_FILE: &str = "roc_summary.json";
pub const RESPONSE_COLUMN: &str = "y";

/// Observations and base features used by `simulate --setting` without a config.
const DEFAULT_N: usize = 250;
const DEFAULT_P_BASE: usize = 10;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruthFile {
    pub config_digest: String,
    pub master_seed: u64,
    pub simulation: SimConfig,
    pub feature_names: Vec<String>,
    pub truth: GroundTruth,
}

#[derive(Debug, Clone, Serialize)]
pub struct HypotestFile {
    pub config_digest: String,
    pub master_seed: u64,
    pub observed: StabilityReport,
    pub null: StabilityReport,
    pub divergence: Divergence,
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodAuc {
    pub auc_mean: f64,
    pub auc_sd: f64,
    pub replicates: usize,
    pub aucs: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RocSummary {
    pub config_digest: String,
    pub master_seed: u64,
    pub methods: BTreeMap<String, MethodAuc>,
}

fn config_dir(path: &Path) -> Option<&Path> {
    path.parent().filter(|p| !p.as_os_str().is_empty())
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(dir) = config_dir(path) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(PcsError::from)?;
    text.push('\n');
    let mut w = create(path)?;
    w.write_all(text.as_bytes()).and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))
}

fn provenance(digest: &str, seed: u64) -> Vec<String> {
    vec![format!("config_digest={digest}"), format!("master_seed={seed}")]
}

fn load_data(source: &DataSource, base: Option<&Path>) -> CliResult<DataMatrix> {
    let path = resolve_path(base, &source.path);
    let data = read_csv_path(&path, &source.response).map_err(|e| match e {
        PcsError::Io(io) => CliError::Data(format!("{}: {io}", path.display())),
        other => other.into(),
    })?;
    if source.standardize {
        Ok(standardize(&data)?)
    } else {
        if !data.is_standardized() {
            log::warn!("features are used as given; the lasso path assumes standardized columns");
        }
        Ok(data)
    }
}

pub fn list_settings() -> String {
    Setting::ALL.iter().map(|s| format!("{:<16}{}\n", s.name(), s.description())).collect()
}

pub fn simulate(config: Option<&Path>, setting: Option<Setting>, seed: Option<u64>, out: &Path) -> CliResult<()> {
    let mut cfg = match config {
        Some(path) => load::<SimulateConfig>(path)?,
        None => {
            let Some(setting) = setting else {
                return Err(CliError::Config("simulate needs --config or --setting".into()));
            };
            SimulateConfig {
                master_seed: 0,
                simulation: SimulationBlock {
                    n: DEFAULT_N,
                    design: Design::Interactions { p_base: DEFAULT_P_BASE },
                    setting: Some(setting),
                    noise: None,
                    misspec: None,
                },
            }
        }
    };
    if let Some(s) = setting {
        cfg.simulation = SimulationBlock { setting: Some(s), noise: None, misspec: None, ..cfg.simulation };
    }
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    let sim_config = cfg.simulation.resolve(cfg.master_seed)?;
    let digest = config_digest(&cfg)?;
    log::info!("simulating n={} p={} (digest {digest})", sim_config.n, sim_config.p());

    let SimDataset { data, truth } = simulate_data(&sim_config)?;
    let data_path = out.join(DATA_FILE);
    let mut w = create(&data_path)?;
    write_csv(&mut w, &data, RESPONSE_COLUMN, &provenance(&digest, cfg.master_seed))?;
    w.flush().map_err(|e| CliError::io(&data_path, e))?;
    let truth_file = TruthFile {
        config_digest: digest,
        master_seed: cfg.master_seed,
        simulation: sim_config,
        feature_names: data.feature_names().to_vec(),
        truth,
    };
    write_json(&out.join(TRUTH_FILE), &truth_file)
}

pub fn analyze(config: &Path, seed: Option<u64>, out: &Path) -> CliResult<()> {
    let mut cfg: AnalyzeConfig = load(config)?;
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    cfg.pcs.validate()?;
    let digest = config_digest(&cfg)?;
    let data = load_data(&cfg.data, config_dir(config))?;
    log::info!("analyzing n={} p={} (digest {digest})", data.n(), data.p());
    let mut report = run_pcs(&data, &cfg.pcs, &SeedSpec::new(cfg.master_seed))?;
    report.config_digest = digest;
    if report.convergence_failures > 0 {
        log::warn!("{} fits did not converge", report.convergence_failures);
    }
    write_json(&out.join(REPORT_FILE), &report)
}

pub fn hypotest(config: &Path, seed: Option<u64>, out: &Path) -> CliResult<()> {
    let mut cfg: HypotestConfig = load(config)?;
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    cfg.pcs.validate()?;
    let digest = config_digest(&cfg)?;
    let data = load_data(&cfg.data, config_dir(config))?;
    let master = SeedSpec::new(cfg.master_seed);
    let null = NullSpec { kind: cfg.null, seed: master.child("null", &[]) };
    let mut result = pcs_hypothesis_test(&data, &null, &cfg.pcs, &master)?;
    result.observed.config_digest = digest.clone();
    result.null.config_digest = digest.clone();
    let file = HypotestFile {
        config_digest: digest,
        master_seed: cfg.master_seed,
        observed: result.observed,
        null: result.null,
        divergence: result.divergence,
    };
    write_json(&out.join(HYPOTEST_FILE), &file)
}

fn roc_on_data(cfg: &RocConfig, base: Option<&Path>) -> CliResult<Vec<MethodSummary>> {
    let source = cfg.data.as_ref().expect("checked by check_source");
    let truth_path = resolve_path(base, cfg.truth.as_ref().expect("checked by check_source"));
    let text = std::fs::read_to_string(&truth_path).map_err(|e| CliError::Data(format!("{}: {e}", truth_path.display())))?;
    let truth_file: TruthFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Data(format!("{}: {e}", truth_path.display())))?;
    let data = load_data(source, base)?;
    if truth_file.truth.p_fitted() != data.p() {
        return Err(CliError::Data(format!(
            "truth describes {} fitted features but the data has {}",
            truth_file.truth.p_fitted(),
            data.p()
        )));
    }
    let dataset = SimDataset { data, truth: truth_file.truth };
    let master = SeedSpec::new(cfg.master_seed);
    let outcomes: Vec<ReplicateOutcome> = (0..cfg.replicates as u64)
        .into_par_iter()
        .map(|r| run_replicate(&dataset, &cfg.pcs, &master.child("replicate-pcs", &[r])))
        .collect::<pcs_core::Result<_>>()?;
    Ok(summarize(&outcomes, &cfg.methods, cfg.grid_points, cfg.count_dropped_as_positives)?)
}

pub fn roc(config: &Path, seed: Option<u64>, out: &Path) -> CliResult<()> {
    let mut cfg: RocConfig = load(config)?;
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    cfg.check_source()?;
    cfg.pcs.validate()?;
    if cfg.replicates == 0 || cfg.methods.is_empty() || cfg.grid_points < 2 {
        return Err(CliError::Config("roc needs replicates >= 1, at least one method and grid_points >= 2".into()));
    }
    let digest = config_digest(&cfg)?;
    let summaries = match &cfg.simulation {
        Some(block) => {
            let spec = BenchmarkSpec {
                simulation: block.resolve(cfg.master_seed)?,
                pcs: cfg.pcs.clone(),
                replicates: cfg.replicates,
                methods: cfg.methods.clone(),
                grid_points: cfg.grid_points,
                count_dropped_as_positives: cfg.count_dropped_as_positives,
            };
            run_benchmark(&spec, &SeedSpec::new(cfg.master_seed))?
        }
        None => roc_on_data(&cfg, config_dir(config))?,
    };

    let mut methods = BTreeMap::new();
    for summary in &summaries {
        let name = summary.method.name();
        let path = out.join(format!("roc_{name}.csv"));
        let mut w = create(&path)?;
        let mut text = String::new();
        for line in provenance(&digest, cfg.master_seed) {
            text.push_str(&format!("# {line}\n"));
        }
        text.push_str("fpr,tpr\n");
        for &(fpr, tpr) in &summary.average.points {
            text.push_str(&format!("{},{}\n", format_float(fpr), format_float(tpr)));
        }
        w.write_all(text.as_bytes()).and_then(|_| w.flush()).map_err(|e| CliError::io(&path, e))?;
        methods.insert(
            name.to_string(),
            MethodAuc {
                auc_mean: summary.auc_mean,
                auc_sd: summary.auc_sd,
                replicates: summary.curves.len(),
                aucs: summary.curves.iter().map(|c| c.auc).collect(),
            },
        );
    }
    write_json(&out.join(ROC_SUMMARY_FILE), &RocSummary { config_digest: digest, master_seed: cfg.master_seed, methods })
}

pub fn docgen(out: &Path) -> CliResult<()> {
    let mut w = create(out)?;
    w.write_all(docgen::render().as_bytes()).and_then(|_| w.flush()).map_err(|e| CliError::io(out, e))
}

