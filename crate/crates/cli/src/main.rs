use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lfreadout::estimator::MeasurementMode;
use lfreadout_cli::{plotdata, CliResult, Overrides};

#[derive(Parser)]
#[command(name = "lfreadout", version, about = "LF-expansion readout experiments")]
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
        overrides: OverrideArgs,
    },
    /// Write plot tables for a finished result directory.
    EmitPlotdata { result_dir: PathBuf },
    /// Check a config without running it.
    Validate {
        config: PathBuf,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Exact,
    Shots,
    Aa,
}

#[derive(Args)]
struct OverrideArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long)]
    shots: Option<u64>,
    /// Result directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl From<OverrideArgs> for Overrides {
    fn from(a: OverrideArgs) -> Self {
        Overrides {
            seed: a.seed,
            trials: a.trials,
            mode: a.mode.map(|m| match m {
                Mode::Exact => MeasurementMode::Exact,
                Mode::Shots => MeasurementMode::Shots,
                Mode::Aa => MeasurementMode::AaEnhanced,
            }),
            shots: a.shots,
            out: a.out,
        }
    }
}

fn dispatch(command: Command) -> CliResult<()> {
    match command {
        Command::Run { config, overrides } => {
            let dir = lfreadout_cli::run(&config, &overrides.into())?;
            println!("{}", dir.display());
        }
        Command::EmitPlotdata { result_dir } => {
            for path in plotdata::emit_plotdata(&result_dir)? {
                println!("{}", path.display());
            }
        }
        Command::Validate { config, overrides } => {
            let hash = lfreadout_cli::validate(&config, &overrides.into())?;
            println!("ok {hash}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
