//! Thin experiment runner over the library.
//!
//! Exit codes: 0 success, 2 config/usage error, 3 protocol abort,
//! 4 I/O error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use qkd_sim::config::{run, ExperimentConfig, Mode, OutputFormat, RunError};
use qkd_sim::report::table1_artifact;

#[derive(Parser)]
#[command(
    name = "qkd-sim",
    version,
    about = "Deterministic QKD link and trusted-relay network simulator"
)]
struct Cli {
    /// Experiment config file (TOML).
    #[arg(long, value_name = "PATH", required_unless_present = "table1")]
    config: Option<PathBuf>,

    /// Emit the bundled calibration report against published reference
    /// systems instead of running a config.
    #[arg(long)]
    table1: bool,

    /// Override the run mode from the config.
    #[arg(long, value_enum)]
    mode: Option<Mode>,

    /// Override the root seed from the config.
    #[arg(long)]
    seed: Option<u64>,

    /// Override the output format.
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,

    /// Override the output path; `-` writes to stdout.
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,

    /// Increase progress chatter on stderr (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(aborted) => {
            if aborted {
                eprintln!("qkd-sim: one or more runs aborted; see the artifact for reasons");
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("qkd-sim: {e}");
            let code = match &e {
                RunError::Config(_) => 2,
                RunError::Sim(sim) if sim.is_protocol_abort() => 3,
                RunError::Sim(_) => 2,
                RunError::Io(_) => 4,
            };
            ExitCode::from(code)
        }
    }
}

fn execute(cli: &Cli) -> Result<bool, RunError> {
    let (artifact, config_output) = if cli.table1 {
        let format = cli.format.unwrap_or_default();
        if cli.verbose > 0 {
            eprintln!("qkd-sim: rendering calibration report");
        }
        (table1_artifact(format)?, None)
    } else {
        let path = cli.config.as_ref().expect("clap requires --config");
        let mut config = ExperimentConfig::load(path)?;
        if let Some(mode) = cli.mode {
            config.mode = mode;
        }
        if let Some(seed) = cli.seed {
            config.seed = seed;
        }
        if let Some(format) = cli.format {
            config.output_format = format;
        }
        config.validate()?;
        let base_dir = path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("."));
        if cli.verbose > 0 {
            eprintln!(
                "qkd-sim: running mode {} with seed {}",
                config.mode.name(),
                config.seed
            );
        }
        let output = config.output_path.clone();
        (run(&config, &base_dir)?, output)
    };

    // CLI --output wins; otherwise the config's output_path; otherwise stdout
    let destination = cli.output.clone().or(config_output);
    match destination {
        Some(path) if path != PathBuf::from("-") => {
            std::fs::write(&path, &artifact.text)?;
            if cli.verbose > 0 {
                eprintln!("qkd-sim: wrote {}", path.display());
            }
        }
        _ => print!("{}", artifact.text),
    }
    Ok(artifact.any_aborted)
}
