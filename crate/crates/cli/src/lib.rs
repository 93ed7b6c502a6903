//   Copyright 2026 zonosafe developers
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.

//! Command-line driver: data generation, synthesis with audit, parameter
//! sweeps, closed-loop simulation and re-validation, all from one JSON
//! experiment config.

pub mod commands;
pub mod config;
pub mod error;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use zonosafe::synthesis::BoundMode;

use crate::commands::SweepKind;
use crate::config::ExperimentConfig;
use crate::error::{CliResult, EXIT_CONFIG, EXIT_OK};

#[derive(Debug, Parser)]
#[command(name = "zonosafe", version, about = "Data-driven λ-contractive controller synthesis experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Overrides `data.seed`; every random stream derives from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Bisection tolerance for sweep frontiers.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub bound_mode: Option<BoundModeArg>,
    /// Output directory; defaults to the config entry, then `$ZONOSAFE_OUT`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate the true system and write the dataset.
    Generate { config: PathBuf },
    /// Synthesize a gain from the dataset and audit it.
    Synthesize {
        config: PathBuf,
        #[command(flatten)]
        prior: PriorFlags,
    },
    /// Feasibility over a λ or b grid plus the frontier value, per prior mode.
    Sweep {
        config: PathBuf,
        #[arg(long, value_enum)]
        sweep: SweepArg,
        #[command(flatten)]
        prior: PriorFlags,
    },
    /// Closed-loop rollouts of the true system under a stored gain.
    Trajectory {
        config: PathBuf,
        result: PathBuf,
        #[arg(long, default_value_t = 50)]
        horizon: usize,
        #[arg(long, default_value_t = 5)]
        runs: usize,
        /// Simulate a gain that is not certified.
        #[arg(long)]
        force: bool,
    },
    /// Re-audit a stored gain against the true system.
    Validate { config: PathBuf, result: PathBuf },
    /// Print the example config.
    ExampleConfig,
}

#[derive(Debug, Args)]
pub struct PriorFlags {
    /// Use the interval prior (synthesize) or only sweep with it.
    #[arg(long, conflicts_with = "no_prior")]
    pub use_prior: bool,
    /// Ignore the interval prior (synthesize) or only sweep without it.
    #[arg(long)]
    pub no_prior: bool,
}

impl PriorFlags {
    fn choice(&self) -> Option<bool> {
        match (self.use_prior, self.no_prior) {
            (true, _) => Some(true),
            (_, true) => Some(false),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum BoundModeArg {
    Paper,
    Sound,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SweepArg {
    Lambda,
    B,
}

fn load(path: &Path, cli: &Cli, use_prior: Option<bool>) -> CliResult<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.data.seed = seed;
    }
    if let Some(tol) = cli.tol {
        cfg.synthesis.sweep.tol = tol;
    }
    if let Some(mode) = cli.bound_mode {
        cfg.synthesis.bound_mode = match mode {
            BoundModeArg::Paper => BoundMode::Paper,
            BoundModeArg::Sound => BoundMode::Sound,
        };
    }
    if let Some(p) = use_prior {
        cfg.synthesis.use_prior = p;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Executes one parsed command, printing a short summary to stdout.
pub fn execute(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Generate { config } => {
            let cfg = load(config, cli, None)?;
            let r = commands::generate(&cfg, &cfg.output_dir(cli.out.as_deref()))?;
            println!("wrote {} samples to {}", r.samples, r.directory.display());
            println!("rank [X0; U0] = {} ({})", r.rank, if r.full_rank { "full row rank" } else { "rank deficient" });
        }
        Command::Synthesize { config, prior } => {
            let cfg = load(config, cli, prior.choice())?;
            if cfg.synthesis.use_prior && cfg.prior.model()?.is_none() {
                eprintln!("note: config has no interval prior, synthesizing from data alone");
            }
            let (path, record) = commands::synthesize(&cfg, &cfg.output_dir(cli.out.as_deref()))?;
            let k = record.result.k.as_ref().map(|k| format!("{:?}", k.as_slice())).unwrap_or_default();
            println!("feasible and certified at λ={}, K={k}", record.result.lambda);
            println!("wrote {}", path.display());
        }
        Command::Sweep { config, sweep, prior } => {
            let cfg = load(config, cli, None)?;
            let modes = match prior.choice() {
                Some(p) => vec![p],
                None if cfg.prior.model()?.is_some() => vec![true, false],
                None => vec![false],
            };
            let kind = match sweep {
                SweepArg::Lambda => SweepKind::Lambda,
                SweepArg::B => SweepKind::B,
            };
            let (path, s) = commands::sweep(&cfg, &cfg.output_dir(cli.out.as_deref()), kind, &modes, cli.jobs)?;
            println!("frontier with prior: {:?}, without prior: {:?}", s.frontier_with_prior, s.frontier_without_prior);
            println!("wrote {}", path.display());
        }
        Command::Trajectory { config, result, horizon, runs, force } => {
            let cfg = load(config, cli, None)?;
            let (path, r) = commands::trajectory(&cfg, &cfg.output_dir(cli.out.as_deref()), result, *horizon, *runs, *force)?;
            println!("{} rows, {} outside the safe set", r.rows, r.unsafe_rows);
            println!("wrote {}", path.display());
        }
        Command::Validate { config, result } => {
            let cfg = load(config, cli, None)?;
            let (path, s) = commands::validate(&cfg, &cfg.output_dir(cli.out.as_deref()), result)?;
            println!("passed: {} points tested, worst margin {:.3e}", s.contractive.tested, s.contractive.worst_margin);
            println!("wrote {}", path.display());
        }
        Command::ExampleConfig => println!("{}", ExperimentConfig::example().to_json()),
    }
    Ok(())
}

/// Parses `args` and runs, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
