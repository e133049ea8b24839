use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "duetwoz",
    version,
    about = "Extend dialogue corpora with a second user and evaluate zero-shot DST"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Run configuration (TOML, or JSON by extension); flags override it
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Seed for every randomized step
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory of the response cache; caching is off without it
    #[arg(long, global = true, value_name = "DIR")]
    pub cache_dir: Option<PathBuf>,
    /// Answer every model call from this mock script instead of a provider
    #[arg(long, global = true, value_name = "PATH")]
    pub mock_script: Option<PathBuf>,
    /// More log output (repeatable)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    /// Only log errors
    #[arg(short, long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Add second-user utterances to every turn of a corpus
    Extend(ExtendArgs),
    /// Run zero-shot state tracking over a corpus and log predictions
    Evaluate(EvaluateArgs),
    /// Score a predictions file against gold states
    Score(ScoreArgs),
    /// Delta rows between a baseline and a second-user score report
    Compare(CompareArgs),
    /// Corpus statistics
    Stats(StatsArgs),
    /// Comparison tables and error cases for one model
    Report(ReportArgs),
    /// Human-evaluation service
    #[command(subcommand)]
    Annotate(AnnotateCommand),
}

#[derive(Debug, Args)]
pub struct ExtendArgs {
    /// MultiWOZ 2.1 or extended corpus
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    /// Extended corpus to write
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    /// Generator model id
    #[arg(long)]
    pub model: String,
    /// JSONL of finished dialogues, resumed on the next run
    #[arg(long, value_name = "PATH")]
    pub checkpoint: Option<PathBuf>,
    /// JSONL receiving every turn's attempts and rejections
    #[arg(long, value_name = "PATH")]
    pub trace: Option<PathBuf>,
    /// Dialogues extended concurrently
    #[arg(long)]
    pub workers: Option<usize>,
    /// Timestamp recorded in the output metadata (RFC 3339); defaults to now
    #[arg(long, value_name = "TIME")]
    pub generated_at: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Single,
    Multi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CarriageArg {
    Session,
    SingleShot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum JgaModeArg {
    Cumulative,
    TurnDelta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum UniverseArg {
    AllSlots,
    DialogueDomains,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Corpus to track
    #[arg(long, value_name = "PATH")]
    pub corpus: PathBuf,
    /// Tracker model id
    #[arg(long)]
    pub model: String,
    /// Show second-user utterances to the tracker
    #[arg(long, value_enum)]
    pub variant: VariantArg,
    /// Predictions JSONL; the manifest is written next to it
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    /// How the transcript is sent to the model
    #[arg(long, value_enum)]
    pub carriage: Option<CarriageArg>,
    /// Dialogues tracked concurrently
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct MetricArgs {
    /// Compute slot-class accuracies
    #[arg(long)]
    pub classes: bool,
    /// States compared by joint goal accuracy
    #[arg(long, value_enum)]
    pub jga_mode: Option<JgaModeArg>,
    /// Slots counted by slot accuracy
    #[arg(long, value_enum)]
    pub slot_universe: Option<UniverseArg>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Predictions JSONL
    #[arg(long, value_name = "PATH")]
    pub pred: PathBuf,
    /// Gold corpus
    #[arg(long, value_name = "PATH")]
    pub gold: PathBuf,
    /// Variant used for class derivation; read from the run manifest when omitted
    #[arg(long, value_enum)]
    pub variant: Option<VariantArg>,
    #[command(flatten)]
    pub metrics: MetricArgs,
    /// Also write the report as pretty JSON
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Baseline score report
    #[arg(long, value_name = "PATH")]
    pub a: PathBuf,
    /// Second-user score report
    #[arg(long, value_name = "PATH")]
    pub b: PathBuf,
    /// Model name shown in the tables
    #[arg(long, default_value = "model")]
    pub model: String,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Corpus to describe
    #[arg(long, value_name = "PATH")]
    pub corpus: PathBuf,
    /// Also write the statistics as JSON
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Baseline predictions JSONL
    #[arg(long, value_name = "PATH")]
    pub single: PathBuf,
    /// Second-user predictions JSONL
    #[arg(long, value_name = "PATH")]
    pub multi: PathBuf,
    /// Gold extended corpus
    #[arg(long, value_name = "PATH")]
    pub gold: PathBuf,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Model name; read from the run manifests when omitted
    #[arg(long)]
    pub model: Option<String>,
    /// Exported judgments; adds scores on the slot-consistent subset
    #[arg(long, value_name = "PATH")]
    pub judgments: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum AnnotateCommand {
    /// Serve the annotation API and UI bundle
    Serve(ServeArgs),
    /// Write the latest judgments as JSONL
    Export(ExportArgs),
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Extended corpus to sample from
    #[arg(long, value_name = "PATH")]
    pub corpus: PathBuf,
    /// Fraction of dialogues to sample
    #[arg(long, default_value_t = 0.10)]
    pub sample: f64,
    /// Port to listen on (0 picks a free one)
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Address to bind
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Judgment journal, replayed on start
    #[arg(long, value_name = "PATH", default_value = "judgments.journal.jsonl")]
    pub journal: PathBuf,
    /// Comma-separated evaluator ids; any id may register when empty
    #[arg(long, value_delimiter = ',')]
    pub evaluators: Vec<String>,
    /// Built UI bundle served at /
    #[arg(long, value_name = "DIR")]
    pub static_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// JSONL to write
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    /// Judgment journal to read
    #[arg(long, value_name = "PATH", default_value = "judgments.journal.jsonl")]
    pub journal: PathBuf,
}
