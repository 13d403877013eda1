use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pcs_cli::commands;
use pcs_cli::CliResult;
use pcs_core::Setting;

#[derive(Parser, Debug)]
#[command(name = "pcs", version, about = "Stability inference for lasso feature selection")]
struct Cli {
    /// Worker threads (default: one per core). Output does not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic dataset and its ground truth.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Named setting; overrides the config's noise and misspecification.
        #[arg(long, value_parser = parse_setting)]
        setting: Option<Setting>,
        /// Print the available settings and exit.
        #[arg(long)]
        list_settings: bool,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, required_unless_present = "list_settings")]
        out: Option<PathBuf>,
    },
    /// Run the stability pipeline on a CSV dataset.
    Analyze {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare the observed data with data generated under a null.
    Hypotest {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Replicated ROC comparison of stability scores and the OLS baseline.
    Roc {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a markdown documentation skeleton.
    Docgen {
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_setting(name: &str) -> Result<Setting, String> {
    Setting::from_name(name).ok_or_else(|| {
        let names: Vec<&str> = Setting::ALL.iter().map(|s| s.name()).collect();
        format!("unknown setting `{name}` (expected one of: {})", names.join(", "))
    })
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate { list_settings: true, .. } => {
            print!("{}", commands::list_settings());
            Ok(())
        }
        Command::Simulate { config, setting, seed, out, .. } => {
            commands::simulate(config.as_deref(), setting, seed, &out.expect("required by clap"))
        }
        Command::Analyze { config, seed, out } => commands::analyze(&config, seed, &out),
        Command::Hypotest { config, seed, out } => commands::hypotest(&config, seed, &out),
        Command::Roc { config, seed, out } => commands::roc(&config, seed, &out),
        Command::Docgen { out } => commands::docgen(&out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PCS_LOG", "warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().expect("global pool is configured once");
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
