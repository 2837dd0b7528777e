use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use episcale_cli::{run_scenario, validate_config, write_outputs, CliError, ExperimentConfig, Scenario};

#[derive(Parser)]
#[command(name = "episcale", version, about = "Multiscale epidemic experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a config file.
    Run {
        config: PathBuf,
        /// Output directory (overrides `out_dir` in the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed (overrides `seed` in the config).
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; falls back to EPISCALE_THREADS.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Check a config file without running it.
    Validate { config: PathBuf },
    /// Print the available scenarios.
    ListScenarios,
}

fn load(path: &PathBuf) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    validate_config(&text).map_err(CliError::Config)
}

fn threads(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("EPISCALE_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(CliError::Config(vec![episcale_cli::ConfigError::Field {
                path: "EPISCALE_THREADS".into(),
                message: format!("expected a positive integer, got `{v}`"),
            }])),
        },
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::ListScenarios => {
            for s in Scenario::ALL {
                println!("{:<24} {}", s.name(), s.description());
            }
        }
        Command::Validate { config } => {
            let cfg = load(&config)?;
            println!("{}: ok ({})", config.display(), cfg.scenario);
        }
        Command::Run { config, out, seed, threads: flag } => {
            let mut cfg = load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let dir = out
                .or_else(|| cfg.out_dir.clone())
                .unwrap_or_else(|| PathBuf::from(format!("out/{}", cfg.scenario)));
            if let Some(n) = threads(flag)? {
                // only fails if a pool already exists, which cannot happen here
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            let output = run_scenario(&cfg)?;
            write_outputs(&dir, &output)?;
            print!("{}", output.report_text());
            println!("wrote {} files to {}", output.artifacts.len() + 1, dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
