use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use auglag_cli::config::{parse_config, ConfigError};
use auglag_cli::run::{
    expand_sweep, read_runs_csv, run_experiment, summarize_rows, write_summary_csv, HarnessError,
};

#[derive(Parser)]
#[command(
    name = "auglag",
    version,
    about = "Constrained stochastic training: sweep runner and reporting"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the sweep described by a config file.
    Run {
        config: PathBuf,
        /// Maximum number of runs executing in parallel.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Override the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Offset added to every seed listed in the config.
        #[arg(long, default_value_t = 0)]
        seed_offset: u64,
    },
    /// Parse and validate a config file without running anything.
    Validate { config: PathBuf },
    /// Recompute summary.csv from an existing runs.csv.
    Summarize {
        runs: PathBuf,
        /// Directory for summary.csv; defaults to the runs.csv directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Run {
            config,
            jobs,
            out,
            seed_offset,
        } => {
            let cfg = parse_config(&config)?;
            let n_runs = expand_sweep(&cfg).len();
            let out_dir = run_experiment(cfg, out, jobs.max(1), seed_offset)?;
            println!("wrote {n_runs} runs to {}", out_dir.display());
            Ok(())
        }
        Command::Validate { config } => {
            let cfg = parse_config(&config)?;
            println!(
                "ok: {} methods, {} runs",
                cfg.run.methods.len(),
                expand_sweep(&cfg).len()
            );
            Ok(())
        }
        Command::Summarize { runs, out } => {
            let rows = read_runs_csv(&runs)?;
            let summary = summarize_rows(&rows);
            let dir = out.unwrap_or_else(|| {
                runs.parent()
                    .map(PathBuf::from)
                    .unwrap_or_else(|| PathBuf::from("."))
            });
            std::fs::create_dir_all(&dir).map_err(|source| HarnessError::Io {
                path: dir.display().to_string(),
                source,
            })?;
            let path = dir.join("summary.csv");
            write_summary_csv(&path, &summary)?;
            println!("wrote {} ({} methods)", path.display(), summary.len());
            Ok(())
        }
    }
}

/// 1 = invalid input (config or CSV contents), 2 = I/O failure.
fn exit_code(e: &HarnessError) -> u8 {
    match e {
        HarnessError::Config(ConfigError::Io { .. })
        | HarnessError::Idx(_)
        | HarnessError::Io { .. }
        | HarnessError::Csv(_) => 2,
        _ => 1,
    }
}
