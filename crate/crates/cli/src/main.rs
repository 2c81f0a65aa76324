use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qm_cli::config::{Format, RunConfig};
use qm_cli::{commands, verify, CliError, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_OK};

/// Axiom verification suite and localized CHSH experiments.
#[derive(Debug, Parser)]
#[command(name = "qm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the invariant suites for all seven axioms on the example system.
    Verify {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Print the full JSON report instead of the text summary.
        #[arg(long)]
        json: bool,
    },
    /// CHSH value against a nested family of detector windows.
    ChshScan {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the config's `format`.
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Time series of a spinning Gaussian packet under the Pauli Hamiltonian.
    Evolve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        dt: f64,
    },
    /// Compare localized correlations with the bounded random-field model.
    RealistCheck {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load(path: Option<&PathBuf>) -> Result<RunConfig, CliError> {
    RunConfig::load(path.map(|p| p.as_path()))?.with_env_seed()
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Verify { config, json } => {
            let cfg = load(config.as_ref())?;
            let report = verify::run(&cfg)?;
            if json {
                emit(None, &(serde_json::to_string_pretty(&report).unwrap() + "\n"))?;
            } else {
                emit(None, &report.to_text())?;
            }
            Ok(if report.passed { EXIT_OK } else { EXIT_CHECK_FAILED })
        }
        Command::ChshScan { config, out, format } => {
            let cfg = load(Some(&config))?;
            let format = format.unwrap_or(cfg.format);
            let report = commands::chsh_scan(&cfg)?;
            emit(out.as_ref(), &report.render(format))?;
            eprintln!("seed {}; {}", report.seed, report.summary());
            let bad = report.violations();
            if !bad.is_empty() {
                return Err(CliError::CheckFailed(format!("{} Bell-flagged rows exceed |S| = 2", bad.len())));
            }
            Ok(EXIT_OK)
        }
        Command::Evolve { config, steps, dt } => {
            let cfg = load(Some(&config))?;
            let report = commands::evolve(&cfg, steps, dt)?;
            emit(None, &report.csv(cfg.time_scale))?;
            eprintln!("seed {}; {}", report.seed, report.summary());
            let failures = report.failures();
            if !failures.is_empty() {
                return Err(CliError::CheckFailed(failures.join("; ")));
            }
            Ok(EXIT_OK)
        }
        Command::RealistCheck { config } => {
            let cfg = load(Some(&config))?;
            let report = commands::realist_check(&cfg)?;
            emit(None, &(serde_json::to_string_pretty(&report).unwrap() + "\n"))?;
            Ok(if report.passed { EXIT_OK } else { EXIT_CHECK_FAILED })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("qm: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
