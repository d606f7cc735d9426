//! Command-line surface of the `xai-chest` binary.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::commands;
use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::suite::{run_suite, SuiteName};

/// Environment variable overriding the output root of the config.
pub const OUT_ENV: &str = "XAI_CHEST_OUT";

#[derive(Debug, Parser)]
#[command(name = "xai-chest", version, about = "Noise-mask explainability experiments for OFDM channel estimation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// TOML experiment config; built-in defaults when absent.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output root. Precedence: this flag, then $XAI_CHEST_OUT, then `paths.out`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Worker threads; 1 gives the reference single-worker run.
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    /// Overrides `master_seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// 200 frames (10,000 symbols) and 100 epochs.
    #[arg(long, global = true)]
    pub desk_scale: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate the training and test datasets.
    GenData,
    /// Train the channel-estimation network U.
    TrainU,
    /// Train the noise-mask network N against the saved U.
    TrainN,
    /// Retrain U on relevant and irrelevant subcarriers for every threshold.
    Sweep,
    /// BER curves of the conventional and network-refined estimators.
    Ber,
    /// FLOPS per inference of dense architectures.
    Flops {
        /// Comma-separated layer widths, e.g. 104,15,15,15,104.
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,
    },
    /// Loss-landscape scans of the saved U along random directions.
    Probe,
    /// Run a complete study.
    Suite { name: SuiteName },
    /// Print the effective config and its digest.
    ShowConfig,
}

impl Cli {
    pub fn effective_config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.master_seed = s;
        }
        if self.desk_scale {
            cfg.desk_scale();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn output_root(&self, cfg: &ExperimentConfig) -> PathBuf {
        self.out
            .clone()
            .or_else(|| std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
            .unwrap_or_else(|| cfg.paths.out.clone())
    }
}

/// Executes `cli` and returns the manifest or output directory it produced.
pub fn execute(cli: &Cli) -> Result<Option<PathBuf>> {
    let cfg = cli.effective_config()?;
    let out = cli.output_root(&cfg);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers.unwrap_or(0))
        .build()
        .map_err(|e| HarnessError::Config(format!("workers: {e}")))?;
    pool.install(|| dispatch(&cli.command, &cfg, &out))
}

fn dispatch(command: &Command, cfg: &ExperimentConfig, out: &Path) -> Result<Option<PathBuf>> {
    let path = match command {
        Command::GenData => commands::gen_data(cfg, out)?,
        Command::TrainU => commands::train_u_cmd(cfg, out)?,
        Command::TrainN => commands::train_n_cmd(cfg, out)?,
        Command::Sweep => commands::sweep_cmd(cfg, out)?,
        Command::Ber => commands::ber_cmd(cfg, out)?,
        Command::Flops { dims } => commands::flops_cmd(cfg, out, dims.as_deref())?,
        Command::Probe => commands::probe_cmd(cfg, out)?,
        Command::Suite { name } => run_suite(cfg, out, *name)?,
        Command::ShowConfig => {
            println!("# digest {}\n{}", cfg.digest(), cfg.to_toml());
            return Ok(None);
        }
    };
    Ok(Some(path))
}
