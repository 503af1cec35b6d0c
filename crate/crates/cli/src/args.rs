use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::render::OutputFormat;

/// Query suggestion from click graphs and word embeddings.
///
/// Every flag can also be set through an environment variable named
/// `QSUGGEST_` followed by the flag name in upper case with dashes turned
/// into underscores (`--min-count` is `QSUGGEST_MIN_COUNT`).
#[derive(Debug, Parser)]
#[command(name = "qsuggest", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a click log into aggregated query-document pairs.
    Ingest(IngestArgs),
    /// Build the graph, embeddings and suggestion table from a pairs file.
    Build(BuildArgs),
    /// Answer one query from an artifact directory.
    Suggest(SuggestArgs),
    /// Serve suggestions over HTTP.
    Serve(ServeArgs),
    /// Prepare annotation worksheets and score them.
    #[command(subcommand)]
    Eval(EvalCommand),
}

#[derive(Debug, Clone, Args)]
pub struct NormArgs {
    /// Latin stop-word file (one token per line, `#` comments).
    #[arg(long, env = "QSUGGEST_STOP_WORDS", value_name = "FILE")]
    pub stop_words: Option<PathBuf>,
    /// CJK stop-word file.
    #[arg(long, env = "QSUGGEST_CJK_STOP_WORDS", value_name = "FILE")]
    pub cjk_stop_words: Option<PathBuf>,
    /// Keep every token.
    #[arg(long, env = "QSUGGEST_NO_STOP_WORDS", conflicts_with_all = ["stop_words", "cjk_stop_words"])]
    pub no_stop_words: bool,
}

#[derive(Debug, Clone, Args)]
pub struct IngestArgs {
    /// Click log: `query<TAB>title<TAB>clicked` per line.
    #[arg(long, env = "QSUGGEST_LOG")]
    pub log: PathBuf,
    /// Where to write the aggregated pairs.
    #[arg(long, env = "QSUGGEST_PAIRS")]
    pub pairs: PathBuf,
    #[arg(long, env = "QSUGGEST_DELIMITER", default_value_t = '\t')]
    pub delimiter: char,
    /// Number of fields per line.
    #[arg(long, env = "QSUGGEST_COLUMNS", default_value_t = 3)]
    pub columns: usize,
    #[arg(long, env = "QSUGGEST_QUERY_COL", default_value_t = 0)]
    pub query_col: usize,
    #[arg(long, env = "QSUGGEST_TITLE_COL", default_value_t = 1)]
    pub title_col: usize,
    #[arg(long, env = "QSUGGEST_CLICKED_COL", default_value_t = 2)]
    pub clicked_col: usize,
    /// Fail on the first malformed line instead of skipping it.
    #[arg(long, env = "QSUGGEST_STRICT")]
    pub strict: bool,
    #[command(flatten)]
    pub norm: NormArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CentroidArg {
    Mean,
    Sum,
}

#[derive(Debug, Clone, Args)]
pub struct CbowArgs {
    /// `key = value` training config; flags take precedence.
    #[arg(long, env = "QSUGGEST_CBOW_CONFIG", value_name = "FILE")]
    pub cbow_config: Option<PathBuf>,
    #[arg(long, env = "QSUGGEST_DIM")]
    pub dim: Option<usize>,
    #[arg(long, env = "QSUGGEST_WINDOW")]
    pub window: Option<usize>,
    #[arg(long, env = "QSUGGEST_NEGATIVES")]
    pub negatives: Option<usize>,
    #[arg(long, env = "QSUGGEST_EPOCHS")]
    pub epochs: Option<usize>,
    #[arg(long, env = "QSUGGEST_SEED")]
    pub seed: Option<u64>,
    #[arg(long, env = "QSUGGEST_MIN_COUNT")]
    pub min_count: Option<u64>,
    #[arg(long, env = "QSUGGEST_LEARNING_RATE")]
    pub learning_rate: Option<f32>,
    /// Training threads; more than one gives up reproducibility.
    #[arg(long, env = "QSUGGEST_WORKERS")]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct BuildArgs {
    #[arg(long, env = "QSUGGEST_PAIRS")]
    pub pairs: PathBuf,
    /// Output artifact directory.
    #[arg(long, env = "QSUGGEST_ARTIFACTS")]
    pub artifacts: PathBuf,
    #[command(flatten)]
    pub cbow: CbowArgs,
    #[arg(long, env = "QSUGGEST_CENTROID", value_enum, default_value_t = CentroidArg::Mean)]
    pub centroid: CentroidArg,
    /// Bridge queries per click-absent query.
    #[arg(long, env = "QSUGGEST_M", default_value_t = qsuggest_core::suggest::DEFAULT_BRIDGES)]
    pub m: usize,
    /// Suggestions per query.
    #[arg(long, env = "QSUGGEST_K", default_value_t = qsuggest_core::graph::DEFAULT_TOP_K)]
    pub k: usize,
    /// Also bridge long-tail click-existing queries.
    #[arg(long, env = "QSUGGEST_ENRICH_LONG_TAIL")]
    pub enrich_long_tail: bool,
    #[command(flatten)]
    pub norm: NormArgs,
}

#[derive(Debug, Clone, Args)]
pub struct QueryOptions {
    /// Defaults to the value the artifacts were built with.
    #[arg(long, env = "QSUGGEST_K")]
    pub k: Option<usize>,
    /// Defaults to the value the artifacts were built with.
    #[arg(long, env = "QSUGGEST_M")]
    pub m: Option<usize>,
    #[arg(long, env = "QSUGGEST_ENRICH_LONG_TAIL")]
    pub enrich_long_tail: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SuggestArgs {
    #[arg(long, env = "QSUGGEST_ARTIFACTS")]
    pub artifacts: PathBuf,
    /// Query text, as a user would type it.
    pub query: String,
    #[command(flatten)]
    pub options: QueryOptions,
    #[arg(long, env = "QSUGGEST_FORMAT", value_enum, default_value_t = OutputFormat::Text)]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    #[arg(long, env = "QSUGGEST_ARTIFACTS")]
    pub artifacts: PathBuf,
    #[arg(long, env = "QSUGGEST_BIND", default_value = "127.0.0.1:8080")]
    pub bind: SocketAddr,
    #[command(flatten)]
    pub options: QueryOptions,
    /// Log one line per request.
    #[arg(long, env = "QSUGGEST_REQUEST_LOG")]
    pub request_log: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClassArg {
    Existing,
    Absent,
}

#[derive(Debug, Subcommand)]
pub enum EvalCommand {
    /// Sample queries per class and write an annotation worksheet.
    Sample(SampleArgs),
    /// Average annotator scores per class.
    Aggregate(AggregateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SampleArgs {
    #[arg(long, env = "QSUGGEST_ARTIFACTS")]
    pub artifacts: PathBuf,
    /// Queries per class.
    #[arg(long, env = "QSUGGEST_N", default_value_t = 100)]
    pub n: usize,
    #[arg(long, env = "QSUGGEST_SEED", default_value_t = 1)]
    pub seed: u64,
    /// Worksheet destination; stdout when absent.
    #[arg(long, env = "QSUGGEST_OUT")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
#[command(group = clap::ArgGroup::new("classes").required(true).args(["class", "artifacts"]))]
pub struct AggregateArgs {
    /// `query<TAB>suggestion<TAB>annotator_id<TAB>score` lines.
    #[arg(long, env = "QSUGGEST_SCORES")]
    pub scores: PathBuf,
    /// Treat every record as belonging to this class.
    #[arg(long, env = "QSUGGEST_CLASS", value_enum)]
    pub class: Option<ClassArg>,
    /// Split records by classifying their queries against these artifacts.
    #[arg(long, env = "QSUGGEST_ARTIFACTS")]
    pub artifacts: Option<PathBuf>,
}
