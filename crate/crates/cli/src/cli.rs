use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use qellip::experiment::DetectorModel;

use crate::commands::{self, EstimateOptions, MethodArg, Output};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "qellip", version, about = "Entangled-photon ellipsometry: simulate, estimate, plot data, compare")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate coincidence counts for the configured plan.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Estimate (C, psi, |delta|) from a counts CSV.
    Estimate {
        /// Counts CSV (`theta1_deg,theta2_deg,dwell_s,counts`).
        #[arg(long)]
        input: PathBuf,
        /// Supplies detector settings and the ground truth echoed in the report.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "three-angle")]
        method: MethodArg,
        /// Overrides the config's accidental rate (default 0).
        #[arg(long)]
        accidental_per_s: Option<f64>,
        /// Overrides the config's visibility (default 1).
        #[arg(long)]
        visibility: Option<f64>,
        /// Free visibility in the fit (V and Δ are degenerate, so this is rejected).
        #[arg(long)]
        fit_visibility: bool,
        /// Iteration cap for `--method fit`.
        #[arg(long, default_value_t = 200)]
        max_iterations: usize,
    },
    /// Noiseless rate curve over the configured theta1 grid.
    Fringe {
        #[arg(long)]
        config: PathBuf,
        /// Output path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classical intensity-ratio psi vs the quantum estimate under the same gain drift.
    Baseline {
        #[arg(long)]
        config: PathBuf,
        /// Output path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "three-angle")]
        method: MethodArg,
        /// Use expected counts instead of Poisson draws.
        #[arg(long)]
        noiseless: bool,
    },
}

impl Command {
    pub fn out(&self) -> Option<&Path> {
        match self {
            Command::Simulate { out, .. }
            | Command::Estimate { out, .. }
            | Command::Fringe { out, .. }
            | Command::Baseline { out, .. } => out.as_deref(),
        }
    }
}

pub fn run(cmd: &Command) -> CliResult<Output> {
    let ok = |body| Output { body, code: 0 };
    match cmd {
        Command::Simulate { config, seed, .. } => commands::simulate(&RunConfig::load(config)?, *seed).map(ok),
        Command::Fringe { config, .. } => commands::fringe(&RunConfig::load(config)?).map(ok),
        Command::Baseline {
            config,
            seed,
            method,
            noiseless,
            ..
        } => commands::baseline(&RunConfig::load(config)?, *method, *noiseless, *seed).map(ok),
        Command::Estimate {
            input,
            config,
            method,
            accidental_per_s,
            visibility,
            fit_visibility,
            max_iterations,
            ..
        } => {
            let cfg = config.as_deref().map(RunConfig::load).transpose()?;
            let base = match &cfg {
                Some(c) => c.detector_model()?,
                None => DetectorModel::ideal(),
            };
            let detector = DetectorModel::new(
                base.eta1,
                base.eta2,
                accidental_per_s.unwrap_or(base.accidental_rate),
                visibility.unwrap_or(base.visibility),
            )
            .map_err(|e| CliError::Config(format!("detector flags: {e}")))?;
            let ground_truth = cfg.as_ref().map(RunConfig::sample_params).transpose()?;
            let text = std::fs::read_to_string(input).map_err(|e| CliError::Schema(format!("cannot read {}: {e}", input.display())))?;
            let opts = EstimateOptions {
                method: *method,
                detector,
                fit_visibility: *fit_visibility,
                max_iterations: *max_iterations,
                ground_truth,
                config: cfg,
            };
            commands::estimate(&text, &opts)
        }
    }
}

/// Writes `body` to `out`, or to stdout when absent.
pub fn emit(out: Option<&Path>, body: &str) -> CliResult<()> {
    use std::io::Write;
    match out {
        Some(path) => std::fs::write(path, body).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(body.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| CliError::Io {
                    path: "stdout".into(),
                    source,
                })
        }
    }
}
