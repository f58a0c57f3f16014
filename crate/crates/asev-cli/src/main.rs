//! `asev` — scenario validation, policy runs, comparisons, and parameter
//! sweeps for an airport service-EV fleet charging simulator.
//!
//! Exit codes: 0 success, 1 input/IO error, 2 infeasible run.

use asev_cli::commands::{self, CmdError};
use asev_core::policies::PolicyKind;
use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "asev",
    version,
    about = "Airport service-EV fleet charging: simulate, compare, and sweep control policies"
)]
struct Cli {
    /// Currency symbol used in console tables.
    #[arg(long, global = true, default_value = "£")]
    currency: String,

    #[command(subcommand)]
    command: Commands,
}

#[derive(Subcommand)]
enum Commands {
    /// Statically validate a scenario document and its referenced files.
    Validate {
        /// Scenario document (TOML).
        scenario: PathBuf,
    },
    /// Simulate one policy through the day and export report files.
    Run {
        /// Scenario document (TOML).
        scenario: PathBuf,
        /// greedy, renewable, or rollout; defaults to the scenario's setting.
        #[arg(long)]
        policy: Option<PolicyKind>,
        /// Override the scenario's workload seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default: $ASEV_OUT, else the working directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run several policies on identical workload realizations and tabulate.
    Compare {
        /// Scenario document (TOML).
        scenario: PathBuf,
        /// Comma-separated policies; deltas are shown against the first.
        #[arg(long, value_delimiter = ',', default_value = "greedy,rollout")]
        policies: Vec<PolicyKind>,
        /// Override the scenario's workload seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default: $ASEV_OUT, else the working directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-run a comparison across values of one numeric scenario parameter.
    Sweep {
        /// Scenario document (TOML).
        scenario: PathBuf,
        /// Parameter to vary (e.g. n_ev, e_work_kwh_per_stage).
        #[arg(long)]
        param: String,
        /// Comma-separated numeric values to try.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
        /// Comma-separated policies to run at each value.
        #[arg(long, value_delimiter = ',', default_value = "greedy,rollout")]
        policies: Vec<PolicyKind>,
        /// Override the scenario's workload seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default: $ASEV_OUT, else the working directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn dispatch(cli: Cli) -> Result<(), CmdError> {
    match cli.command {
        Commands::Validate { scenario } => commands::cmd_validate(&scenario),
        Commands::Run {
            scenario,
            policy,
            seed,
            out,
        } => commands::cmd_run(&scenario, policy, seed, out),
        Commands::Compare {
            scenario,
            policies,
            seed,
            out,
        } => commands::cmd_compare(&scenario, &policies, seed, out, &cli.currency),
        Commands::Sweep {
            scenario,
            param,
            values,
            policies,
            seed,
            out,
        } => commands::cmd_sweep(&scenario, &param, &values, &policies, seed, out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err @ CmdError::Input(_)) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
        Err(err @ CmdError::Infeasible(_)) => {
            eprintln!("{err}");
            ExitCode::from(2)
        }
    }
}
