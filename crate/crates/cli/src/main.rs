use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lazywalk_cli::{
    load_config, run_classical, run_metrics, run_simulate, run_spectral, run_sweep, CliError, LoadedConfig, Manifest,
    RunOptions,
};

/// Lazy and normal quantum walk experiments.
#[derive(Parser)]
#[command(name = "lazywalk", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the position distribution at every recorded step.
    Simulate(Common),
    /// Write one time series per metric listed in `[run] metrics`.
    Metrics(Common),
    /// Write the band structure, velocity density and asymptotic summary.
    Spectral(Common),
    /// Classical occupancy rate against its large-t asymptotics.
    Classical(Common),
    /// Run the `[sweep]` table, one walk per value.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `[run] output`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long)]
    workers: Option<usize>,
}

type Runner = fn(&LoadedConfig, &RunOptions) -> Result<Manifest, CliError>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (run, common): (Runner, Common) = match cli.command {
        Command::Simulate(c) => (run_simulate, c),
        Command::Metrics(c) => (run_metrics, c),
        Command::Spectral(c) => (run_spectral, c),
        Command::Classical(c) => (run_classical, c),
        Command::Sweep(c) => (run_sweep, c),
    };
    let opts = RunOptions {
        out: common.out,
        workers: common.workers,
    };
    let result = load_config(&common.config).and_then(|cfg| run(&cfg, &opts));
    match result {
        Ok(manifest) => {
            println!("wrote {} files to {}", manifest.files.len() + 1, describe_out(&opts));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn describe_out(opts: &RunOptions) -> String {
    opts.out
        .as_ref()
        .map_or_else(|| "the configured output directory".to_string(), |p| p.display().to_string())
}
