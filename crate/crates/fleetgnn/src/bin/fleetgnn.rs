//! Thin scenario-runner CLI over the library; see the crate examples for
//! programmatic use.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fleetgnn::scenario::{self, ScenarioFile};
use fleetgnn::Error;

#[derive(Parser)]
#[command(name = "fleetgnn", about = "Run and validate forecasting scenarios", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a scenario file (TOML or JSON) or a named preset.
    Run {
        /// Scenario file path; omit when using --preset.
        file: Option<PathBuf>,
        /// Built-in preset name: fig4, fig6, fig7, gen.
        #[arg(long)]
        preset: Option<String>,
        /// Output directory (default: out/<scenario name>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Master seed override.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check a scenario file without running it.
    Validate {
        file: PathBuf,
    },
}

fn load(file: Option<&PathBuf>, preset: Option<&String>) -> Result<ScenarioFile, Error> {
    match (file, preset) {
        (Some(path), None) => scenario::parse_scenario(path),
        (None, Some(name)) => {
            let text = scenario::preset(name).ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "unknown preset {name}; available: {}",
                    scenario::PRESET_NAMES.join(", ")
                ))
            })?;
            scenario::parse_scenario_str(text)
        }
        (Some(_), Some(_)) => Err(Error::InvalidConfig(
            "pass either a scenario file or --preset, not both".into(),
        )),
        (None, None) => Err(Error::InvalidConfig(
            "pass a scenario file or --preset <name>".into(),
        )),
    }
}

const EXIT_RUNTIME: u8 = 1;
const EXIT_VALIDATION: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { file, preset, out, seed } => {
            let scenario = match load(file.as_ref(), preset.as_ref()) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_VALIDATION);
                }
            };
            let out_dir = out.unwrap_or_else(|| PathBuf::from("out").join(&scenario.name));
            match scenario::run(&scenario, &out_dir, seed) {
                Ok(artifacts) => {
                    println!("wrote {} artifact(s) to {}", artifacts.files.len(), out_dir.display());
                    for f in &artifacts.files {
                        println!("  {f}");
                    }
                    println!("provenance {}", artifacts.provenance_hash);
                    ExitCode::SUCCESS
                }
                Err(Error::Validation(diagnostics)) => {
                    for d in &diagnostics {
                        eprintln!("invalid: {d}");
                    }
                    ExitCode::from(EXIT_VALIDATION)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_RUNTIME)
                }
            }
        }
        Command::Validate { file } => {
            let scenario = match scenario::parse_scenario(&file) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("invalid: {e}");
                    return ExitCode::from(EXIT_VALIDATION);
                }
            };
            let diagnostics = scenario::validate(&scenario);
            if diagnostics.is_empty() {
                println!("ok: {} parses and validates", file.display());
                ExitCode::SUCCESS
            } else {
                for d in &diagnostics {
                    eprintln!("invalid: {d}");
                }
                ExitCode::from(EXIT_VALIDATION)
            }
        }
    }
}
