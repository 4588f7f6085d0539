//! Command-line runner for the experiment harness.
//!
//! Exit codes: 0 when every metric of a run passes, 2 when at least one
//! fails, 1 on any execution error (bad config, I/O, simulation).

use clap::{Parser, Subcommand};
use kinlab::harness::{self, HarnessError, Overrides, ScenarioConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "kinlab",
    version,
    about = "Simulation laboratory for kinetic particles with boundary reflection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario from a config file, printing one line per metric.
    Run {
        /// TOML scenario config.
        #[arg(long)]
        config: PathBuf,
        /// Override the scenario name from the config.
        #[arg(long)]
        scenario: Option<String>,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the number of simulated paths.
        #[arg(long)]
        paths: Option<u64>,
        /// Override the simulation time step.
        #[arg(long)]
        dt: Option<f64>,
        /// Override the time horizon.
        #[arg(long)]
        horizon: Option<f64>,
        /// Override the force-field exponent (selects builtin:<beta>).
        #[arg(long)]
        beta: Option<f64>,
        /// Override the boundary law selector, e.g. "half_gaussian:1".
        #[arg(long)]
        mu: Option<String>,
        /// Override the artifact directory.
        #[arg(long)]
        out_dir: Option<String>,
    },
    /// List the registered scenarios.
    ListScenarios,
    /// Parse and validate a config file without running anything.
    ValidateConfig {
        /// TOML scenario config.
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, HarnessError> {
    match cli.command {
        Command::ListScenarios => {
            for (name, blurb) in harness::CATALOG {
                println!("{name:24} {blurb}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::ValidateConfig { config } => {
            let rc = ScenarioConfig::from_file(&config)?.resolve()?;
            println!(
                "ok: {} with {} paths, alpha = {}, mu = {}",
                rc.cfg.scenario,
                rc.cfg.n_paths,
                rc.stable.alpha,
                rc.mu.selector()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Run {
            config,
            scenario,
            seed,
            paths,
            dt,
            horizon,
            beta,
            mu,
            out_dir,
        } => {
            let mut cfg = ScenarioConfig::from_file(&config)?;
            cfg.apply(&Overrides { scenario, seed, paths, dt, horizon, beta, mu, out_dir });
            let rc = cfg.resolve()?;
            let report = harness::run_scenario(&rc)?;
            for m in &report.metrics {
                println!(
                    "{} {:<34} value {:>12.6}  threshold {:>12.6}",
                    if m.pass { "PASS" } else { "FAIL" },
                    m.name,
                    m.value,
                    m.threshold
                );
            }
            println!(
                "{}: {} ({:.3} s)",
                report.scenario,
                if report.pass { "all checks passed" } else { "CHECKS FAILED" },
                report.wall_time_seconds
            );
            Ok(if report.pass { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
    }
}
