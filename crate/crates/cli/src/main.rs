use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use opab_cli::commands;
use opab_core::types::Arm;

/// Off-policy augmented A/B testing: estimation, simulation, propensity
/// fitting and seeded experiment sweeps.
#[derive(Parser)]
#[command(name = "opab", version, about)]
struct Cli {
    /// Master seed recorded in outputs and used by simulation commands.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output path (directory or file, subcommand-specific).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for experiment repetitions (does not affect results).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Two-sided confidence level parameter.
    #[arg(long, global = true, default_value_t = 0.05)]
    alpha: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run improvement estimators on a trajectory log.
    Estimate {
        /// JSON-lines trajectory log.
        #[arg(long)]
        log: PathBuf,
        /// Policy A propensity source (policy spec or fitted model JSON).
        #[arg(long)]
        policy_a: PathBuf,
        /// Policy B propensity source.
        #[arg(long)]
        policy_b: PathBuf,
        /// Comma-separated estimator ids, e.g.
        /// "diff,ips,h1,fstar,fstar_robust:cliplog:0.5,mixture".
        #[arg(long, value_delimiter = ',')]
        estimators: Vec<String>,
    },
    /// Simulate an environment into a trajectory log (plus sidecar).
    Simulate {
        /// Simulation config JSON.
        #[arg(long)]
        config: PathBuf,
    },
    /// Fit a softmax-linear propensity model on one arm of a log.
    FitPropensity {
        #[arg(long)]
        log: PathBuf,
        /// Arm to fit: A or B.
        #[arg(long)]
        arm: String,
        /// L2 regularization strength.
        #[arg(long, default_value_t = 1e-4)]
        reg: f64,
        #[arg(long, default_value_t = 500)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-5)]
        tol: f64,
    },
    /// Run a seeded experiment grid from a config file.
    Experiment {
        /// Experiment config JSON.
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Estimate { log, policy_a, policy_b, estimators } => {
            let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("estimate_out"));
            commands::cmd_estimate(log, policy_a, policy_b, estimators, cli.alpha, &out, cli.seed)
        }
        Command::Simulate { config } => {
            let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("simulated.jsonl"));
            commands::cmd_simulate(config, &out)
        }
        Command::FitPropensity { log, arm, reg, max_iter, tol } => {
            let arm = match arm.as_str() {
                "A" | "a" => Ok(Arm::A),
                "B" | "b" => Ok(Arm::B),
                other => Err(opab_cli::CliError::usage(format!("arm must be A or B, got '{other}'"))),
            };
            arm.and_then(|arm| {
                let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("fitted_policy.json"));
                commands::cmd_fit_propensity(log, arm, *reg, *max_iter, *tol, &out)
            })
        }
        Command::Experiment { config } => {
            commands::cmd_experiment(config, cli.out.as_deref(), cli.workers)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.exit_code.clamp(0, 255) as u8)
        }
    }
}
