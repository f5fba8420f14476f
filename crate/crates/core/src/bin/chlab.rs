use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use chlab::harness::{render_dir, run, RunConfig, RunOptions, OUTPUT_ROOT_ENV};
use chlab::Error;

/// Experiment harness for the stochastic Cahn-Hilliard solver.
#[derive(Debug, Parser)]
#[command(name = "chlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Execute the study named in the config and write its artifacts.
    Run {
        #[arg(long, short)]
        config: PathBuf,
        #[arg(long)]
        seed_override: Option<u64>,
        /// Worker threads for replica cells (0: one per core).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Root directory for a relative `output_dir`.
        #[arg(long, env = OUTPUT_ROOT_ENV)]
        output: Option<PathBuf>,
    },
    /// Check the hypotheses and print the resolved config.
    Validate {
        #[arg(long, short)]
        config: PathBuf,
        #[arg(long)]
        seed_override: Option<u64>,
    },
    /// Re-render the summary of a finished run directory.
    Report {
        dir: PathBuf,
    },
}

fn load(path: &Path, seed_override: Option<u64>) -> Result<RunConfig, Error> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(s) = seed_override {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run {
            config,
            seed_override,
            jobs,
            output,
        } => match load(&config, None).and_then(|cfg| {
            run(
                &cfg,
                &RunOptions {
                    seed_override,
                    jobs,
                    output_root: output,
                },
            )
        }) {
            Ok(out) => {
                if let Some(r) = &out.report {
                    for c in &r.checks {
                        println!("{:<13} {:<22} {}", c.status.as_str(), c.name, c.detail);
                    }
                }
                match &out.error {
                    Some(e) => eprintln!("error: {e}"),
                    None => println!(
                        "status {}",
                        out.status.map(|s| s.to_string()).unwrap_or_default()
                    ),
                }
                println!("artifacts in {}", out.dir.display());
                out.exit_code
            }
            Err(e) => {
                eprintln!("error: {e}");
                1
            }
        },
        Command::Validate {
            config,
            seed_override,
        } => match load(&config, seed_override) {
            Ok(cfg) => {
                match cfg.to_toml_string() {
                    Ok(text) => print!("{text}"),
                    Err(e) => eprintln!("error: {e}"),
                }
                let diags = cfg.diagnostics();
                for d in &diags {
                    eprintln!("error: {d}");
                }
                if diags.is_empty() {
                    0
                } else {
                    1
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                1
            }
        },
        Command::Report { dir } => match render_dir(&dir) {
            Ok(text) => {
                print!("{text}");
                0
            }
            Err(e) => {
                eprintln!("error: {e}");
                1
            }
        },
    };
    ExitCode::from(code as u8)
}
