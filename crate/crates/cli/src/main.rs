use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use riotwave_cli::{dispatch, init_threads, parse_config, CliError};

/// Runs riot-wave experiments described by TOML config files.
///
/// Exit codes: 0 ok, 2 config error, 3 numerical failure, 4 I/O error.
#[derive(Parser)]
#[command(name = "riotwave", disable_version_flag = true)]
struct Cli {
    /// Print progress and the manifest to stderr.
    #[arg(long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment in CONFIG and write its outputs.
    Run {
        config: PathBuf,
        /// Output directory, created if absent.
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Parse and validate CONFIG without running it.
    Validate { config: PathBuf },
    /// Print the tool version.
    Version,
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Version => println!("riotwave {}", env!("CARGO_PKG_VERSION")),
        Command::Validate { config } => {
            let cfg = parse_config(&config)?;
            if cli.verbose {
                eprintln!("{}", cfg.to_toml()?);
            }
            println!("ok: {} ({})", config.display(), cfg.experiment.name());
        }
        Command::Run { config, out_dir } => {
            let threads = init_threads()?;
            let cfg = parse_config(&config)?;
            let bytes = std::fs::read(&config)?;
            if cli.verbose {
                eprintln!("running {} with {} workers", cfg.experiment.name(), threads.unwrap_or_else(rayon::current_num_threads));
            }
            let manifest = dispatch(&cfg, &bytes, &out_dir)?;
            for w in &manifest.warnings {
                eprintln!("warning: {w}");
            }
            if cli.verbose {
                eprintln!("{}", serde_json::to_string_pretty(&manifest)?);
            }
            for o in &manifest.outputs {
                println!("{}", out_dir.join(&o.file).display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(2);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.report());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
