use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

/// Embed, extract and attack structural graph watermarks.
///
/// Exit status: 0 on success (for `extract`, at least one watermark found),
/// 1 when `extract` finds nothing, 2 on usage or input errors.
#[derive(Parser, Debug)]
#[command(name = "graphmark", version)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Serialize)]
pub struct Global {
    /// Seed for every random choice. A fresh one is drawn and reported when absent.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true, env = "GRAPHMARK_WORKERS")]
    pub workers: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    #[serde(skip)]
    pub output: Format,
    /// Indent JSON output.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub pretty: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(untagged)]
pub enum Command {
    /// Create the owner's graph key and key pairs for users (and groups).
    Keygen(KeygenArgs),
    /// Sign a timestamp with a user key, as the user side of issuance.
    Respond(RespondArgs),
    /// Watermark size and uniqueness bounds for a graph size.
    Bounds(BoundsArgs),
    /// Check whether a graph can hide a watermark.
    Suitability(SuitabilityArgs),
    /// Issue a watermarked, anonymized copy to one user.
    Embed(EmbedArgs),
    /// Look for registered watermarks in a suspect graph.
    Extract(ExtractArgs),
    /// Simulate an attacker.
    #[command(subcommand)]
    Attack(AttackCommand),
    /// Structural metrics of a graph, or the distortion between two.
    Metrics(MetricsArgs),
    /// Robustness curves: attack strength against extraction success.
    Sweep(SweepArgs),
    /// Write a synthetic graph.
    Generate(GenerateArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Keygen(_) => "keygen",
            Command::Respond(_) => "respond",
            Command::Bounds(_) => "bounds",
            Command::Suitability(_) => "suitability",
            Command::Embed(_) => "embed",
            Command::Extract(_) => "extract",
            Command::Attack(AttackCommand::Single(_)) => "attack single",
            Command::Attack(AttackCommand::Collude(_)) => "attack collude",
            Command::Metrics(_) => "metrics",
            Command::Sweep(_) => "sweep",
            Command::Generate(_) => "generate",
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct KeygenArgs {
    /// Directory for `graph.key`, `users/<id>.json` and `groups.json`.
    #[arg(long, default_value = "keys")]
    pub dir: PathBuf,
    /// Comma-separated user ids.
    #[arg(long, value_delimiter = ',')]
    pub users: Vec<String>,
    /// Also split the users into groups.
    #[arg(long)]
    pub groups: bool,
    /// Replace an existing graph key.
    #[arg(long)]
    pub force: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct RespondArgs {
    /// The user's key file.
    #[arg(long)]
    pub key: PathBuf,
    /// RFC 3339 timestamp to sign; defaults to now.
    #[arg(long)]
    pub timestamp: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct BoundsArgs {
    #[arg(long)]
    pub n: u64,
    #[arg(long, default_value_t = 0.3)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.99999)]
    pub target: f64,
    /// Also report the collusion survival probability for this many colluders.
    #[arg(long)]
    pub ma: Option<u32>,
    /// Group partitions, used with `--ma`.
    #[arg(long, default_value_t = 2)]
    pub j: u32,
}

#[derive(Args, Debug, Serialize)]
pub struct SuitabilityArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, default_value_t = 0.3)]
    pub delta: f64,
    /// Override the watermark size instead of deriving it from `--delta`.
    #[arg(long)]
    pub k: Option<usize>,
    /// Growth starts sampled for the density estimates.
    #[arg(long, default_value_t = 100_000)]
    pub trials: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct EmbedArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// Registry to append to; created if missing.
    #[arg(long)]
    pub registry: PathBuf,
    #[arg(long)]
    pub user: String,
    #[arg(long, default_value = "keys")]
    pub keys: PathBuf,
    /// Signed timestamp from `respond`. Without it the user's key file in
    /// the key directory is used to sign in-process.
    #[arg(long)]
    pub response: Option<PathBuf>,
    /// Timestamp for in-process signing; defaults to now.
    #[arg(long)]
    pub timestamp: Option<String>,
    /// Embed the user's two group watermarks too.
    #[arg(long)]
    pub groups: bool,
    /// Individual watermark copies.
    #[arg(long, default_value_t = 3)]
    pub copies: u32,
    #[arg(long, default_value_t = 0.3)]
    pub delta: f64,
    #[arg(long)]
    pub k: Option<usize>,
    /// Where to write the released edge list.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the watermarked graph before anonymization, keeping the
    /// input file's node ids (for `metrics`).
    #[arg(long)]
    pub clean_out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Approx,
}

#[derive(Args, Debug, Serialize)]
pub struct MatchArgs {
    #[arg(long, value_enum, default_value_t = Mode::Exact)]
    pub mode: Mode,
    /// NSD bucket size (approx mode).
    #[arg(long)]
    pub bucket: Option<u32>,
    /// NSD overlap threshold (approx mode).
    #[arg(long)]
    pub theta: Option<f64>,
    /// Edge-mismatch budget (approx mode).
    #[arg(long = "L", visible_alias = "max-mismatch")]
    pub max_mismatch: Option<u32>,
    /// Give up on a record after this many search steps.
    #[arg(long)]
    pub step_limit: Option<u64>,
}

#[derive(Args, Debug, Serialize)]
pub struct ExtractArgs {
    #[arg(long)]
    pub suspect: PathBuf,
    #[arg(long)]
    pub registry: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub matching: MatchArgs,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(untagged)]
pub enum AttackCommand {
    /// Add and delete random edges in one copy.
    Single(SingleArgs),
    /// Align several copies and keep the majority edges.
    Collude(ColludeArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct SingleArgs {
    /// The copy to attack (exactly one).
    #[arg(long, num_args = 1.., required = true)]
    pub graphs: Vec<PathBuf>,
    /// Edges to modify.
    #[arg(long)]
    pub strength: usize,
    /// Share of modifications that add an edge.
    #[arg(long, default_value_t = 0.5)]
    pub add_fraction: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Original graph, for normalized distortion (needs `--clean`).
    #[arg(long, requires = "clean")]
    pub original: Option<PathBuf>,
    /// Watermarked graph in the original's ids.
    #[arg(long, requires = "original")]
    pub clean: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Tie {
    Drop,
    Keep,
}

#[derive(Args, Debug, Serialize)]
pub struct ColludeArgs {
    /// The colluding copies; the first is the alignment reference.
    #[arg(long, num_args = 2.., required = true)]
    pub graphs: Vec<PathBuf>,
    /// Number of colluders; must match the number of graphs when given.
    #[arg(long)]
    pub ma: Option<usize>,
    /// What to do with an edge exactly half the copies have.
    #[arg(long, value_enum, default_value_t = Tie::Drop)]
    pub tie: Tie,
    #[arg(long, default_value_t = 1000)]
    pub seeds_matched: usize,
    #[arg(long, default_value_t = 1)]
    pub margin: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct MetricsArgs {
    #[arg(long)]
    pub original: PathBuf,
    /// A modified graph over the same node ids; reports the distortion.
    #[arg(long)]
    pub changed: Option<PathBuf>,
    /// BFS sources for path length and diameter.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct SweepArgs {
    /// TOML or JSON sweep description.
    #[arg(long)]
    pub config: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    HeavyTailed,
    ErdosRenyi,
    Grid,
}

#[derive(Args, Debug, Serialize)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub kind: Kind,
    /// Nodes (rows for a grid).
    #[arg(long)]
    pub n: usize,
    /// Edges for heavy-tailed graphs (default 3n); columns for a grid.
    #[arg(long)]
    pub m: Option<usize>,
    /// Degree exponent for heavy-tailed graphs.
    #[arg(long, default_value_t = 2.1)]
    pub exponent: f64,
    /// Edge probability for Erdős–Rényi graphs.
    #[arg(long, default_value_t = 0.01)]
    pub p: f64,
    #[arg(long)]
    pub out: PathBuf,
}
