//! Pipeline commands over one declarative config file.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;

/// Errors split by exit code: configuration problems exit 2, runtime
/// failures exit 1.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(anyhow::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "{msg}"),
            CliError::Runtime(err) => write!(f, "{err}"),
        }
    }
}

impl From<graphmotif_core::Error> for CliError {
    fn from(err: graphmotif_core::Error) -> Self {
        use graphmotif_core::Error as E;
        match err {
            E::InvalidConfig(_)
            | E::InvalidFraction(_)
            | E::UnknownDoc { .. }
            | E::UnknownLabel { .. } => CliError::Config(err.to_string()),
            other => CliError::Runtime(anyhow::Error::new(other)),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(err: anyhow::Error) -> Self {
        CliError::Runtime(err)
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Runtime(err.into())
    }
}

#[derive(Parser)]
#[command(
    name = "graphmotif",
    about = "Machine-text detection over token/document graphs, with motif explanations",
    version
)]
struct Cli {
    /// Path to the TOML run configuration.
    #[arg(long, global = true, default_value = "graphmotif.toml")]
    config: PathBuf,
    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: GRAPHMOTIF_THREADS or all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ingest the dataset and write corpus + graph caches.
    BuildGraph,
    /// Train the detector on the cached graph and write a checkpoint.
    Train,
    /// Classify graph documents or new texts.
    Predict {
        /// Comma-separated document ids already in the graph.
        #[arg(long, value_delimiter = ',')]
        doc_ids: Vec<usize>,
        /// JSON-lines file of new texts to attach and classify.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Extract motifs for documents or the global fingerprint.
    Explain {
        /// Comma-separated document ids.
        #[arg(long, value_delimiter = ',')]
        doc_ids: Vec<usize>,
        /// Aggregate masks into the global motif and fingerprint table.
        #[arg(long)]
        global: bool,
    },
    /// Deletion curves for the exported edge importance.
    Faithfulness,
    /// Terminal-token experiment comparing the graph detector against the
    /// context-limited sequential baseline.
    Synth,
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let threads = cli.threads.or_else(|| {
        std::env::var("GRAPHMOTIF_THREADS")
            .ok()
            .and_then(|s| s.parse().ok())
    });
    if let Some(n) = threads {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(err)) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut config = RunConfig::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    match cli.command {
        Command::BuildGraph => commands::build_graph(&config),
        Command::Train => commands::train(&config),
        Command::Predict { doc_ids, input } => commands::predict(&config, &doc_ids, input),
        Command::Explain { doc_ids, global } => commands::explain(&config, &doc_ids, global),
        Command::Faithfulness => commands::faithfulness(&config),
        Command::Synth => commands::synth(&config),
    }
}
