use clap::{Parser, Subcommand};
use lab::{run, ExperimentConfig, Mode, RunError};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "lab", about = "Checkerboard composite experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its tables and figures.
    Run { config: PathBuf },
    /// Write only the figure of an experiment.
    Render { config: PathBuf },
    /// Check a configuration without running it.
    Validate { config: PathBuf },
}

fn init_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("LAB_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| format!("LAB_THREADS={v:?} is not a positive integer"))?;
    if n == 0 {
        return Err("LAB_THREADS must be positive".into());
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let (path, mode) = match &cli.command {
        Command::Run { config } => (config, Some(Mode::Run)),
        Command::Render { config } => (config, Some(Mode::Render)),
        Command::Validate { config } => (config, None),
    };
    let cfg = match ExperimentConfig::load(path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let Some(mode) = mode else {
        println!("{}: ok ({})", path.display(), cfg.experiment.name());
        return ExitCode::SUCCESS;
    };
    match run(&cfg, mode) {
        Ok(files) => {
            println!("{}", lab::runner::summary(&cfg, &files));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, RunError::Experiment(_) | RunError::Io { .. }) {
                eprintln!("partial artifacts, if any, are kept with a .partial suffix");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
