use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spinforge_cli::config::ExperimentKind;
use spinforge_cli::experiments::run_aht;
use spinforge_cli::{run_experiment, CliError, ExperimentConfig, Report};

const THREADS_ENV: &str = "SPINFORGE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "spinforge", version, about = "Spin-reservoir thermalization experiments")]
struct Cli {
    /// Worker threads (default: available cores). SPINFORGE_THREADS takes precedence.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Output directory; overrides `output_dir` from the config.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Compare the cycle-averaged natural Hamiltonian with the exchange form.
    AhtCheck {
        /// Optional config supplying couplings, convention and pulse spacing.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// List the available experiments.
    ListExperiments,
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Config {
                field: THREADS_ENV.into(),
                message: format!("expected a positive integer, got {v:?}"),
            }),
        },
        Err(_) => Ok(flag),
    }
}

fn print_checks(report: &Report) {
    for c in &report.checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        let op = serde_json::to_value(c.comparison).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default();
        println!("[{status}] {}: {:.6e} {op} {:.6e}", c.name, c.value, c.threshold);
    }
}

fn execute(cli: Cli) -> Result<bool, CliError> {
    if let Some(n) = thread_count(cli.threads)? {
        // Fails only if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match cli.command {
        Command::ListExperiments => {
            for k in ExperimentKind::ALL {
                println!("{:<12} {}", k.name(), k.description());
            }
            Ok(true)
        }
        Command::AhtCheck { config } => {
            let cfg = match config {
                Some(p) => ExperimentConfig::from_path(&p)?,
                None => ExperimentConfig::from_toml("experiment = \"aht-check\"\n")?,
            };
            let report = run_aht(&cfg)?;
            print_checks(&report);
            Ok(report.passed())
        }
        Command::Run { config, output } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            let dir = output
                .or_else(|| cfg.output_dir.clone())
                .unwrap_or_else(|| PathBuf::from("results").join(cfg.experiment.name()));
            log::info!("running {} into {}", cfg.experiment.name(), dir.display());
            let report = run_experiment(&cfg)?;
            for p in report.write(&cfg, &dir)? {
                println!("wrote {}", p.display());
            }
            print_checks(&report);
            Ok(report.passed())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: one or more invariant checks failed");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
