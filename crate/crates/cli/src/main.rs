//! `coalitions`: run the channel-coupling pipeline stage by stage or end to end.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use coalitions_core::pipeline::{Outcome, Overrides, Pipeline, PipelineConfig, Stage, CATALOG_ENDPOINT_ENV};
use coalitions_core::Error;

#[derive(Parser)]
#[command(
    name = "coalitions",
    version,
    about = "Mine narrative coalitions from channel link archives"
)]
struct Cli {
    /// TOML config; relative paths in it resolve against its directory.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides output.dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for community detection and layout.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    min_bcf: Option<u32>,
    /// Channels kept, ranked by catalog links.
    #[arg(long, global = true)]
    top_k: Option<usize>,
    /// Most-cited catalog sources removed before coupling.
    #[arg(long, global = true)]
    exclude_top: Option<usize>,
    /// Treat channels without a broadcast flag as broadcast.
    #[arg(long, global = true)]
    assume_broadcast: bool,
    /// Keep the last two host labels instead of using the public suffix list.
    #[arg(long, global = true)]
    naive_sld: bool,
    /// -v for progress, -vv for debug output.
    #[arg(long, short, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Stream messages, keep broadcast channels, extract URLs.
    Extract,
    /// Resolve shortened links.
    Expand,
    /// Build the normalized source catalog (file or harvest).
    Catalog,
    /// Aggregate channel profiles and build citation matrices.
    Matrix,
    /// Compute coupling frequencies and the thresholded graph.
    Couple,
    /// Louvain communities and coalition summary.
    Communities,
    /// ForceAtlas2 positions.
    Layout,
    /// Frequency tables, statistics and graph export.
    Report,
    /// Every stage in order.
    All,
    /// Validate the configuration and exit.
    Check,
}

impl Command {
    fn stage(self) -> Option<Stage> {
        Some(match self {
            Command::Extract => Stage::Extract,
            Command::Expand => Stage::Expand,
            Command::Catalog => Stage::Catalog,
            Command::Matrix => Stage::Matrix,
            Command::Couple => Stage::Couple,
            Command::Communities => Stage::Communities,
            Command::Layout => Stage::Layout,
            Command::Report => Stage::Report,
            Command::All | Command::Check => return None,
        })
    }
}

fn load(cli: &Cli) -> Result<PipelineConfig, Error> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    config.apply(&Overrides {
        out: cli.out.clone(),
        seed: cli.seed,
        min_bcf: cli.min_bcf,
        top_k: cli.top_k,
        exclude_top: cli.exclude_top,
        assume_broadcast: cli.assume_broadcast.then_some(true),
        naive_sld: cli.naive_sld.then_some(true),
        catalog_endpoint: std::env::var(CATALOG_ENDPOINT_ENV).ok().filter(|s| !s.is_empty()),
    });
    Ok(config)
}

fn report(stage: Stage, outcome: Outcome) {
    match outcome {
        Outcome::Ran => println!("{stage}: done"),
        Outcome::UpToDate => println!("{stage}: up to date"),
    }
}

fn run(cli: &Cli) -> Result<(), Error> {
    let pipeline = Pipeline::new(load(cli)?)?;
    match cli.command.stage() {
        Some(stage) => report(stage, pipeline.run_stage(stage)?),
        None if matches!(cli.command, Command::Check) => {
            println!("configuration ok; output directory {}", pipeline.out_dir().display())
        }
        None => {
            for (stage, outcome) in pipeline.run_all()? {
                report(stage, outcome);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
