use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use falsify_cli::config::{seed_override, ExperimentConfig, MatrixConfig};
use falsify_cli::experiment::{run_experiment, ExperimentResult};
use falsify_cli::output::{print_table, write_experiment, write_matrix};
use falsify_cli::specs::{builtin_spec, BUILTIN_SPECS};
use falsify_cli::theory_check::TheoryFile;
use falsify_cli::CliError;

/// Falsification of signal temporal logic specifications on black-box models.
#[derive(Parser)]
#[command(name = "falsify", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the trials of one experiment config.
    Run {
        config: PathBuf,
        /// Output directory; overrides `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a list of experiments and write one summary table.
    Matrix {
        file: PathBuf,
        /// Output root; overrides `dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the staging soundness checks listed in a file and print a JSON report.
    TheoryCheck {
        file: PathBuf,
        /// Also write the report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Show built-in specifications.
    Spec {
        name: Option<String>,
        #[arg(long)]
        list: bool,
    },
}

fn default_dir(name: &str) -> PathBuf {
    Path::new("results").join(name)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let stdout = std::io::stdout();
    match cli.command {
        Command::Run { config, out } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(seed) = seed_override()? {
                cfg.seed = seed;
            }
            let exp = cfg.resolve()?;
            let dir = out.or_else(|| exp.output.dir.clone()).unwrap_or_else(|| default_dir(&exp.name));
            let result = run_experiment(&exp)?;
            write_experiment(&exp, &result, &dir)?;
            let mut lock = stdout.lock();
            let _ = print_table(&mut lock, &[&result.summary]);
            let _ = writeln!(lock, "results in {}", dir.display());
        }
        Command::Matrix { file, out } => {
            let mut m = MatrixConfig::load(&file)?;
            if let Some(seed) = seed_override()? {
                m.experiment.iter_mut().for_each(|e| e.seed = seed);
            }
            let exps = m.resolve()?;
            let root = out.or(m.dir.clone()).unwrap_or_else(|| default_dir("matrix"));
            let mut results: Vec<ExperimentResult> = Vec::with_capacity(exps.len());
            for exp in &exps {
                let result = run_experiment(exp)?;
                let dir = exp.output.dir.clone().unwrap_or_else(|| root.join(&exp.name));
                write_experiment(exp, &result, &dir)?;
                eprintln!("{}: {}", exp.name, result.summary.successes);
                results.push(result);
            }
            write_matrix(&results, &root)?;
            let rows: Vec<_> = results.iter().map(|r| &r.summary).collect();
            let mut lock = stdout.lock();
            let _ = print_table(&mut lock, &rows);
            let _ = writeln!(lock, "results in {}", root.display());
        }
        Command::TheoryCheck { file, out } => {
            let mut checks = TheoryFile::load(&file)?;
            if let Some(seed) = seed_override()? {
                checks.seed = seed;
            }
            let results = checks.run()?;
            let json = serde_json::to_string_pretty(&results)? + "\n";
            if let Some(path) = out {
                std::fs::write(&path, &json).map_err(|source| CliError::Io { path, source })?;
            }
            let _ = stdout.lock().write_all(json.as_bytes());
        }
        Command::Spec { name, list } => {
            let mut lock = stdout.lock();
            match name {
                Some(n) if !list => {
                    let s = builtin_spec(&n).map_err(|e| falsify_cli::config::ConfigError::Invalid {
                        key: "spec".into(),
                        message: e.to_string(),
                    })?;
                    let _ = writeln!(lock, "{}", s.text);
                }
                _ => {
                    for s in BUILTIN_SPECS {
                        let _ = writeln!(lock, "{:<20} {:<18} T={:<4} K={}  {}", s.name, s.model, s.horizon, s.control_points, s.text);
                    }
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
