use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use curved_tube::catalog;
use curved_tube::config::RunConfig;
use curved_tube::run::{exit_code, run, RunOptions};
use curved_tube::TubeError;

#[derive(Parser)]
#[command(name = "curved-tube", version, about = "Dirichlet spectra and bound-state certificates for curved tubes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a config file, or a shipped example by name.
    Run {
        /// Path to a TOML config, or the name of a shipped example.
        config: String,
        /// Output directory (default: output.dir from the config, else <name>-out).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed for the Lanczos start vector; overrides solver.seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Number of grids in the refinement study (Δ, Δ/2, ...).
        #[arg(long)]
        refine: Option<usize>,
        /// Dump stiffness and mass of the finest grid in Matrix Market format.
        #[arg(long)]
        emit_matrix: bool,
        /// Write eigenvector slices along s and across the section.
        #[arg(long)]
        emit_slices: bool,
        /// Write the rotation-frame table.
        #[arg(long)]
        emit_frame: bool,
    },
    /// List the shipped example configs.
    ListExamples,
}

fn load(spec: &str) -> Result<(RunConfig, PathBuf), TubeError> {
    let path = Path::new(spec);
    if path.is_file() {
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        return Ok((RunConfig::load(path)?, base));
    }
    match catalog::find(spec) {
        Some(e) => Ok((e.config()?, PathBuf::from("."))),
        None => Err(TubeError::Config {
            message: format!("`{spec}` is neither a config file nor a shipped example"),
            line: 0,
            column: 0,
        }),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::ListExamples => {
            print!("{}", catalog::listing());
            ExitCode::SUCCESS
        }
        Command::Run { config, out, seed, refine, emit_matrix, emit_slices, emit_frame } => {
            let opts = RunOptions { out, seed, refine, emit_matrix, emit_slices, emit_frame };
            let result = load(&config).and_then(|(cfg, base)| run(&cfg, &base, &opts));
            match result {
                Ok(outcome) => {
                    for c in &outcome.report.checks {
                        println!("{}", c.line());
                    }
                    for w in &outcome.report.warnings {
                        eprintln!("warning: {w}");
                    }
                    println!("wrote {}", outcome.out_dir.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(exit_code(&e) as u8)
                }
            }
        }
    }
}
