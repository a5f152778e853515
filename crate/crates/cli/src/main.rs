use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qsteer_cli::{
    emit_csv, parse_config, run_experiment, sweep, write_csv, ConfigError, ExperimentConfig,
    ExperimentKind, Overrides, ResultRow, RunError,
};

#[derive(Parser)]
#[command(
    name = "qsteer",
    version,
    about = "Measurement-driven state steering experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Success probability at theta = pi/4 for overlaps 2/3, 1/3 and 0.
    Figure1a {
        #[command(flatten)]
        common: Common,
    },
    /// Success probability from the orthogonal state for theta = pi/4, pi/8, pi/12.
    Figure1b {
        #[command(flatten)]
        common: Common,
    },
    /// Run a parameter sweep described by a config file.
    Sweep {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Write CSV here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo trajectories per row.
    #[arg(long)]
    trajectories: Option<usize>,
    /// Skip Monte Carlo columns.
    #[arg(long)]
    exact_only: bool,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            trajectories: self.trajectories,
            exact_only: self.exact_only,
        }
    }
}

fn load(path: &Path) -> Result<ExperimentConfig, RunError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| {
        RunError::Config(ConfigError {
            message: format!("{}: {}", path.display(), e.message),
            path: e.path,
        })
    })
}

fn execute(cli: Cli) -> Result<(), RunError> {
    let (mut config, common, sweeping) = match cli.command {
        Command::Run { config, common } => (load(&config)?, common, false),
        Command::Sweep { config, common } => (load(&config)?, common, true),
        Command::Figure1a { common } => (
            ExperimentConfig::of_kind(ExperimentKind::Figure1a),
            common,
            false,
        ),
        Command::Figure1b { common } => (
            ExperimentConfig::of_kind(ExperimentKind::Figure1b),
            common,
            false,
        ),
    };
    common.overrides().apply(&mut config)?;
    if config.seed.is_none() {
        eprintln!("qsteer: no seed given, using seed 0");
    }
    let rows = if sweeping {
        sweep(&config)?
    } else {
        run_experiment(&config)?
    };
    write(&rows, common.out.as_deref())
}

fn write(rows: &[ResultRow], out: Option<&Path>) -> Result<(), RunError> {
    match out {
        Some(path) => emit_csv(rows, path).map_err(|e| RunError::Io(e.to_string())),
        None => write_csv(rows, std::io::stdout().lock())
            .map_err(|e| RunError::Io(format!("<stdout>: {e}"))),
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qsteer: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
