//! `batman explore` and `batman simulate`.
//!
//! Exit status: 0 on success, 1 when the explorer finds a violation (or
//! stops at the state cap), 2 for usage, configuration and I/O errors.

mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use batman_core::config::{OutputFormat, ScenarioConfig};
use batman_core::explorer::{explore, ExploreOptions};
use batman_core::sim::run_batch;
use batman_core::Interpretation;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "batman",
    version,
    about = "B.A.T.M.A.N. route discovery: exhaustive exploration and timed simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Explore every reachable state of the untimed model and check its properties.
    Explore {
        #[command(flatten)]
        common: Common,
        /// Interleave local processing with sends instead of giving it priority.
        #[arg(long)]
        no_reduction: bool,
    },
    /// Run a batch of timed simulations and write the metric series.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        runs: Option<usize>,
    },
}

#[derive(Args)]
struct Common {
    /// Scenario file (key=value lines).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    interpretation: Option<Interpretation>,
    /// Directory for the output files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    format: Option<OutputFormat>,
}

impl Common {
    fn load(&self) -> Result<ScenarioConfig, String> {
        let mut cfg = match &self.config {
            Some(path) => ScenarioConfig::load(path).map_err(|e| format!("{}: {e}", path.display()))?,
            None => ScenarioConfig::default(),
        };
        if let Some(i) = self.interpretation {
            cfg.interpretation = i;
        }
        if let Some(out) = &self.out {
            cfg.out = Some(out.clone());
        }
        if let Some(f) = self.format {
            cfg.format = f;
        }
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<ExitCode, String> {
    match command {
        Command::Explore { common, no_reduction } => {
            let cfg = common.load()?;
            let (params, topology) = cfg.resolve().map_err(|e| e.to_string())?;
            if cfg.budgets.is_empty() {
                eprintln!("warning: no budgets configured, nobody sends an OGM");
            }
            let opts = ExploreOptions {
                reduction: !no_reduction,
                state_cap: cfg.state_cap,
                ..ExploreOptions::default()
            };
            let report = explore(&params, &topology, &cfg.budgets, opts);
            print!("{}", output::explore_summary(&cfg, &report));
            if let Some(dir) = &cfg.out {
                output::write_explore(dir, cfg.format, &cfg, &report)?;
            }
            Ok(if report.passed() && report.complete {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Simulate { common, seed, runs } => {
            let mut cfg = common.load()?;
            if let Some(s) = seed {
                cfg.timed.seed = s;
            }
            if let Some(r) = runs {
                cfg.timed.runs = r;
            }
            let (params, topology) = cfg.resolve().map_err(|e| e.to_string())?;
            // fail on an unusable output directory before spending time on the runs
            if let Some(dir) = &cfg.out {
                output::prepare_dir(dir)?;
            }
            let batch = run_batch(&params, &topology, &cfg.timed).map_err(|e| e.to_string())?;
            match &cfg.out {
                Some(dir) => {
                    output::write_simulation(dir, cfg.format, &cfg, &batch)?;
                    print!("{}", output::simulate_summary(&cfg, &batch));
                }
                None => print!("{}", output::aggregate_csv(&batch).map_err(|e| e.to_string())?),
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
