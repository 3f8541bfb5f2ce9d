//! Command-line driver: training, evaluation, experiment grids, exports and
//! linear baselines, each writing into a run directory.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
pub mod config;
mod rundir;

pub use rundir::RunDir;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] scarn_core::Error),
}

impl CliError {
    /// 2 for usage and configuration problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) | CliError::Core(scarn_core::Error::Config(_)) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "scarn", version, about = "SCARN text classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a neural model from a JSON config, one run per seed.
    Train(TrainArgs),
    /// Score a trained run's checkpoint on a split.
    Evaluate(EvaluateArgs),
    /// Run a diagnostic experiment grid.
    #[command(subcommand)]
    Experiment(ExperimentCommand),
    /// Export analysis artifacts from a trained run.
    Export(ExportArgs),
    /// Fit a bag-of-words or TF-IDF logistic regression.
    Baseline(BaselineArgs),
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    run_dir: Option<PathBuf>,
    /// Record wall-clock seconds in history.csv (makes it non-reproducible).
    #[arg(long)]
    timings: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SplitArg {
    Train,
    Dev,
    Test,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    run_dir: PathBuf,
    #[arg(long, value_enum, default_value = "test")]
    split: SplitArg,
    /// Checkpoint other than the run's own checkpoint.json.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GridArgs {
    /// JSON experiment config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    max_len: Option<usize>,
    #[arg(long)]
    embed_dim: Option<usize>,
    #[arg(long)]
    filters: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// Worker threads for grid cells; 0 uses every core.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    run_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum ExperimentCommand {
    /// Single-window CNN accuracy across window sizes and word orderings.
    WindowOrdering {
        #[command(flatten)]
        grid: GridArgs,
        /// Window sizes; `N` stands for the maximum length.
        #[arg(long, value_delimiter = ',')]
        windows: Option<Vec<String>>,
        #[arg(long, value_delimiter = ',')]
        orderings: Option<Vec<String>>,
    },
    /// CNN accuracy when pooling the n-th largest activation.
    NthMaxpool {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long = "n", value_delimiter = ',')]
        n_values: Option<Vec<usize>>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ExportKind {
    Attention,
    Provenance,
    ConvEmbeddings,
    ConcatStats,
}

#[derive(Debug, Args)]
struct ExportArgs {
    #[arg(value_enum)]
    kind: ExportKind,
    #[arg(long)]
    run_dir: PathBuf,
    #[arg(long, value_enum, default_value = "test")]
    split: SplitArg,
    /// Export only the first this many examples.
    #[arg(long)]
    limit: Option<usize>,
    /// Words for conv-embeddings; defaults to the whole vocabulary.
    #[arg(long, value_delimiter = ',')]
    words: Option<Vec<String>>,
}

#[derive(Debug, Args)]
struct BaselineArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<String>,
    /// logreg_bow or logreg_tfidf.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    max_len: Option<usize>,
    #[arg(long)]
    l2: Option<f64>,
    #[arg(long)]
    run_dir: Option<PathBuf>,
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train(a) => commands::train(&a.config, a.run_dir, a.timings),
        Command::Evaluate(a) => commands::evaluate(a.run_dir, a.split.into(), a.checkpoint),
        Command::Experiment(ExperimentCommand::WindowOrdering { grid, windows, orderings }) => {
            commands::window_ordering(grid.into(), windows, orderings)
        }
        Command::Experiment(ExperimentCommand::NthMaxpool { grid, n_values }) => {
            commands::nth_maxpool(grid.into(), n_values)
        }
        Command::Export(a) => commands::export(a.kind.into(), a.run_dir, a.split.into(), a.limit, a.words),
        Command::Baseline(a) => commands::baseline(commands::BaselineFlags {
            config: a.config,
            dataset: a.dataset,
            model: a.model,
            max_len: a.max_len,
            l2: a.l2,
            run_dir: a.run_dir,
        }),
    }
}

impl From<SplitArg> for scarn_core::textpipe::SplitName {
    fn from(s: SplitArg) -> Self {
        match s {
            SplitArg::Train => Self::Train,
            SplitArg::Dev => Self::Dev,
            SplitArg::Test => Self::Test,
        }
    }
}

impl From<ExportKind> for commands::Export {
    fn from(k: ExportKind) -> Self {
        match k {
            ExportKind::Attention => Self::Attention,
            ExportKind::Provenance => Self::Provenance,
            ExportKind::ConvEmbeddings => Self::ConvEmbeddings,
            ExportKind::ConcatStats => Self::ConcatStats,
        }
    }
}

impl From<GridArgs> for commands::GridFlags {
    fn from(g: GridArgs) -> Self {
        commands::GridFlags {
            config: g.config,
            dataset: g.dataset,
            seeds: g.seeds,
            max_len: g.max_len,
            embed_dim: g.embed_dim,
            filters: g.filters,
            epochs: g.epochs,
            batch_size: g.batch_size,
            lr: g.lr,
            threads: g.threads,
            run_dir: g.run_dir,
        }
    }
}
