use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use gwlab::experiments::{load_config, run_to_dir, ConfigError, Experiment, RunError};

/// Run a seeded experiment and write its data files and manifest.
#[derive(Debug, Parser)]
#[command(name = "gwlab", version = gwlab::experiments::VERSION)]
struct Cli {
    /// One of: return-prob, ct-return, lifshits-extinct, dos, atom-zero,
    /// islands-audit, norm-audit, bad-event.
    experiment: String,
    /// JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key; VALUE is parsed as JSON, else taken as a string.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads (0 uses all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gwlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cli: &Cli) -> Result<(), RunError> {
    let kind: Experiment = cli.experiment.parse()?;
    let text = match &cli.config {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("--config", format!("{}: {e}", path.display())))?,
        None => String::new(),
    };
    let (config, echo) = load_config(&text, &cli.set)?;
    config.validate(kind)?;
    let manifest = gwlab::parallel::with_threads(cli.threads, || run_to_dir(kind, &config, echo, &cli.out))?;
    for entry in &manifest.outputs {
        println!("{}", cli.out.join(&entry.file).display());
    }
    Ok(())
}
