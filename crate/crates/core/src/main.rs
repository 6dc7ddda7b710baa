use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hawkes_topics::pipeline::{
    cmd_events, cmd_fit, cmd_run, cmd_simulate, cmd_topics, PipelineConfig, PipelineError, RunManifest, RunOptions,
};

/// Topic-occurrence and price-jump Hawkes pipeline.
#[derive(Parser)]
#[command(version)]
struct Cli {
    /// Pipeline configuration (TOML). Without it every key takes its default.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding `out_dir` from the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed, overriding `seed` from the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Skip and count malformed input lines instead of failing.
    #[arg(long, global = true)]
    lenient: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit per-source dynamic topic models; write topic reports and theta CSVs.
    Topics,
    /// Build topic and market jump streams; write the event CSV and overlap report.
    Events,
    /// Fit the Hawkes network; write the weight CSV, posterior JSON and heatmap.
    Fit,
    /// Simulate a network spec into an event CSV that `fit` reads.
    Simulate {
        /// Network spec (TOML with labels, lambda0, weights).
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 50_000)]
        n_buckets: usize,
    },
    /// Run topics, events and fit in order.
    Run,
}

fn options(cli: &Cli) -> Result<RunOptions, PipelineError> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(out) = &cli.out {
        config.out_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    Ok(RunOptions {
        config,
        lenient: cli.lenient,
    })
}

fn dispatch(cli: &Cli) -> Result<RunManifest, PipelineError> {
    let opts = options(cli)?;
    match &cli.command {
        Command::Topics => cmd_topics(&opts),
        Command::Events => cmd_events(&opts),
        Command::Fit => cmd_fit(&opts),
        Command::Simulate { spec, n_buckets } => cmd_simulate(&opts, spec, *n_buckets),
        Command::Run => cmd_run(&opts),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(manifest) => {
            for stage in &manifest.stages {
                for w in &stage.warnings {
                    eprintln!("warning: {}: {w}", stage.name);
                }
            }
            for f in &manifest.files {
                println!("{}", f);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
