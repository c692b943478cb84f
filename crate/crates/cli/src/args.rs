use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "wrts", version, about = "War-RTS simulator, player modelling and evolution driver")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Play one game between the virtual player and a persona or genome.
    Simulate(SimulateArgs),
    /// Evolve a virtual player against a fixed player model.
    Evolve(EvolveArgs),
    /// Run the play-model-evolve loop for a number of rounds.
    Pmea(PmeaArgs),
    /// Run the map × algorithm comparison and write the report.
    Experiment(ExperimentArgs),
    /// Recompute a report from raw game records.
    Stats(StatsArgs),
    /// Serve the session protocol over HTTP and WebSocket.
    Serve(ServeArgs),
}

/// World options shared by every game-playing command.
#[derive(Debug, Clone, Args)]
pub struct WorldArgs {
    /// `key = value` world configuration file.
    #[arg(long, value_name = "PATH")]
    pub world_config: Option<PathBuf>,
    /// Overrides the configured turn limit.
    #[arg(long)]
    pub max_turns: Option<u32>,
}

/// EA options shared by the evolving commands.
#[derive(Debug, Clone, Args)]
pub struct EaArgs {
    /// `key = value` EA configuration file.
    #[arg(long, value_name = "PATH")]
    pub ea_config: Option<PathBuf>,
    #[arg(long)]
    pub popsize: Option<usize>,
    #[arg(long)]
    pub generations: Option<u32>,
    #[arg(long)]
    pub ea_seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Map file or `builtin:<name>`.
    #[arg(long, default_value = "builtin:arena20")]
    pub map: String,
    /// Virtual-player genome file; the rule-based player when omitted.
    #[arg(long, value_name = "PATH")]
    pub vp_genome: Option<PathBuf>,
    /// Human-side genome file, played without noise.
    #[arg(long, value_name = "PATH", conflicts_with = "persona")]
    pub hp_genome: Option<PathBuf>,
    /// Human-side persona.
    #[arg(long, default_value = "rbp-mirror")]
    pub persona: String,
    /// Game number handed to the persona (matters for drifters).
    #[arg(long, default_value_t = 1)]
    pub game: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub world: WorldArgs,
    #[arg(long, value_name = "PATH")]
    pub replay_out: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub model_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    /// Player model: a genome file or a counts model file.
    #[arg(long, value_name = "PATH")]
    pub model: PathBuf,
    /// Starting virtual player; the rule-based player when omitted.
    #[arg(long, value_name = "PATH")]
    pub seed_genome: Option<PathBuf>,
    #[arg(long, default_value = "builtin:arena20")]
    pub map: String,
    #[command(flatten)]
    pub world: WorldArgs,
    #[command(flatten)]
    pub ea: EaArgs,
    /// Where to write the best genome; printed to stdout when omitted.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Per-generation JSONL log.
    #[arg(long, value_name = "PATH")]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PmeaArgs {
    #[arg(long, default_value_t = 20)]
    pub rounds: u32,
    /// Persona playing the on-line games.
    #[arg(long, conflicts_with = "live", required_unless_present = "live")]
    pub persona: Option<String>,
    /// Wait for a human on the session server each round.
    #[arg(long)]
    pub live: bool,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: SocketAddr,
    /// Turns per second of live sessions.
    #[arg(long, default_value_t = 2.0)]
    pub tick_rate: f64,
    #[arg(long, value_name = "DIR")]
    pub output_dir: PathBuf,
    #[arg(long, default_value = "builtin:arena20")]
    pub map: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Build each model from all on-line games so far instead of the last one.
    #[arg(long)]
    pub cumulative: bool,
    #[command(flatten)]
    pub world: WorldArgs,
    #[command(flatten)]
    pub ea: EaArgs,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Comma-separated map list.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "builtin:field50x50,builtin:field54x46,builtin:field50x28"
    )]
    pub maps: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "RBP,PMEA")]
    pub algorithms: Vec<String>,
    /// Games per (map, algorithm) cell; also the PMEA round count.
    #[arg(long, default_value_t = 20)]
    pub games: u32,
    #[arg(long, default_value = "drifter(5)")]
    pub persona: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Build each model from all on-line games so far instead of the last one.
    #[arg(long)]
    pub cumulative: bool,
    /// CSV report path.
    #[arg(long, value_name = "PATH")]
    pub report_out: PathBuf,
    /// Raw records; `<report>.records.jsonl` when omitted.
    #[arg(long, value_name = "PATH")]
    pub records_out: Option<PathBuf>,
    /// Keeps PMEA round artifacts under `<dir>/<map>`.
    #[arg(long, value_name = "DIR")]
    pub output_dir: Option<PathBuf>,
    /// Also run the adaptation check over master seeds 0..N.
    #[arg(long, value_name = "N")]
    pub adaptation_seeds: Option<u64>,
    /// Adaptation summary JSON path; printed to stdout when omitted.
    #[arg(long, value_name = "PATH")]
    pub adaptation_out: Option<PathBuf>,
    #[command(flatten)]
    pub world: WorldArgs,
    #[command(flatten)]
    pub ea: EaArgs,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// JSONL game records.
    #[arg(long, value_name = "PATH")]
    pub records: PathBuf,
    /// CSV output; stdout when omitted.
    #[arg(long, value_name = "PATH")]
    pub report_out: Option<PathBuf>,
    /// Emit the JSON report instead of CSV.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: SocketAddr,
}
