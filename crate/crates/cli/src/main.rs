//! `handwave`: simulate, decode, project, compare and reconstruct
//! whole-hand vibration recordings.

mod commands;
mod error;
mod manifest;
mod render;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "handwave", version, about = "Whole-hand vibration sensing pipeline")]
struct Cli {
    /// Log progress (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file through the simulator and write the recorded stream.
    Simulate(SimulateArgs),
    /// Encode a frame CSV into the binary stream format.
    Encode(EncodeArgs),
    /// Decode a binary stream into a frame CSV.
    Decode(DecodeArgs),
    /// Project every sensor onto its principal axis.
    Project(ProjectArgs),
    /// Pairwise similarity of recordings.
    Similarity(SimilarityArgs),
    /// Reconstruct the surface vibration field from projected channels.
    Reconstruct(ReconstructArgs),
    /// RMS map of a reconstructed field.
    RmsMap(RmsMapArgs),
    /// Frame rate the bus schedule sustains at a given clock.
    Throughput(ThroughputArgs),
    /// Run several stages in order on one scenario.
    Run(RunArgs),
}

#[derive(Args, Clone)]
pub struct OutArgs {
    /// Output directory; also where stages look for each other's artifacts.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Args, Clone)]
pub struct GeometryArgs {
    /// Hand surface as ASCII PLY or XYZ, in mm. Defaults to the built-in fixture.
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    /// Neighbors per vertex in the surface graph.
    #[arg(long, default_value_t = handwave_core::geometry::DEFAULT_NEIGHBORS)]
    pub neighbors: usize,
    /// Uniform hand scale applied to the fixture and the default sensor layout.
    #[arg(long, default_value_t = 1.0)]
    pub hand_scale: f64,
    /// Sensor configuration file replacing the default layout.
    #[arg(long)]
    pub sensors: Option<PathBuf>,
}

#[derive(Args, Clone)]
pub struct ProjectionArgs {
    /// PCA window length N in samples.
    #[arg(long, default_value_t = handwave_core::signal::pca::DEFAULT_WINDOW)]
    pub window: usize,
    /// Hop between windows; defaults to N/2.
    #[arg(long)]
    pub hop: Option<usize>,
    /// Use the raw second-moment matrix instead of the covariance.
    #[arg(long)]
    pub uncentered: bool,
}

#[derive(Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub out: OutArgs,
    #[arg(long)]
    pub scenario: PathBuf,
    /// Override the scenario's noise seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the scenario's full-scale range, in g.
    #[arg(long)]
    pub range: Option<f64>,
    #[command(flatten)]
    pub geometry: GeometryArgs,
}

#[derive(Args)]
pub struct EncodeArgs {
    #[command(flatten)]
    pub out: OutArgs,
    /// Frame CSV; defaults to frames.csv in the output directory.
    #[arg(long)]
    pub frames: Option<PathBuf>,
    #[arg(long, default_value_t = handwave_core::DEFAULT_RATE_HZ)]
    pub rate: f64,
    /// Full-scale range the counts were recorded at, in g.
    #[arg(long, default_value_t = 2.0)]
    pub range: f64,
}

#[derive(Args)]
pub struct DecodeArgs {
    #[command(flatten)]
    pub out: OutArgs,
    /// Stream file; defaults to stream.bin in the output directory.
    #[arg(long)]
    pub stream: Option<PathBuf>,
}

#[derive(Args)]
pub struct ProjectArgs {
    #[command(flatten)]
    pub out: OutArgs,
    #[arg(long)]
    pub stream: Option<PathBuf>,
    #[command(flatten)]
    pub projection: ProjectionArgs,
}

#[derive(Args)]
pub struct SimilarityArgs {
    #[command(flatten)]
    pub out: OutArgs,
    /// Recordings: binary streams (.bin) or projected channel CSVs.
    #[arg(required = true, num_args = 1..)]
    pub recordings: Vec<PathBuf>,
    /// Maximum lag in samples; defaults to min(length - 1, rate / 2).
    #[arg(long)]
    pub max_lag: Option<usize>,
    /// Sample rate of channel CSV inputs.
    #[arg(long, default_value_t = handwave_core::DEFAULT_RATE_HZ)]
    pub rate: f64,
    #[command(flatten)]
    pub projection: ProjectionArgs,
}

#[derive(Args)]
pub struct ReconstructArgs {
    #[command(flatten)]
    pub out: OutArgs,
    /// Channel CSV; defaults to channels.csv in the output directory.
    #[arg(long)]
    pub channels: Option<PathBuf>,
    #[arg(long, default_value_t = handwave_core::DEFAULT_RATE_HZ)]
    pub rate: f64,
    #[arg(long, default_value_t = handwave_core::recon::DEFAULT_ALPHA_MM)]
    pub alpha: f64,
    #[arg(long, default_value_t = handwave_core::recon::DEFAULT_C)]
    pub c: f64,
    #[arg(long, default_value_t = handwave_core::recon::DEFAULT_GAIN)]
    pub gain: f64,
    /// Keep negative weights instead of clipping them to zero.
    #[arg(long)]
    pub no_rectify: bool,
    /// RMS window in ms for rms.csv.
    #[arg(long, default_value_t = handwave_core::recon::RMS_WINDOW_MS)]
    pub window_ms: f64,
    /// Also write the sensor distance fields to distances.bin.
    #[arg(long)]
    pub save_distances: bool,
    #[command(flatten)]
    pub geometry: GeometryArgs,
}

#[derive(Args)]
pub struct RmsMapArgs {
    #[command(flatten)]
    pub out: OutArgs,
    /// Field file; defaults to field.bin in the output directory.
    #[arg(long)]
    pub field: Option<PathBuf>,
    #[arg(long, default_value_t = handwave_core::recon::RMS_WINDOW_MS)]
    pub window_ms: f64,
    /// End of the window in ms; defaults to the end of the field.
    #[arg(long)]
    pub end_ms: Option<f64>,
    #[command(flatten)]
    pub geometry: GeometryArgs,
}

#[derive(Args)]
pub struct ThroughputArgs {
    /// I²C clock in Hz.
    #[arg(long, default_value_t = 1.6e6)]
    pub clock_hz: f64,
    /// Comma-separated digits whose branches are populated (e.g. "I,II").
    #[arg(long, value_delimiter = ',')]
    pub branches: Vec<String>,
}

#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum Stage {
    Simulate,
    Decode,
    Project,
    Reconstruct,
    RmsMap,
}

#[derive(Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub out: OutArgs,
    #[arg(long)]
    pub scenario: PathBuf,
    /// Stages to run; they execute in pipeline order whatever order is given.
    #[arg(long, value_delimiter = ',', default_value = "simulate,decode,project,reconstruct,rms-map")]
    pub stages: Vec<Stage>,
    #[command(flatten)]
    pub geometry: GeometryArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(&a),
        Command::Encode(a) => commands::encode(&a),
        Command::Decode(a) => commands::decode(&a),
        Command::Project(a) => commands::project(&a),
        Command::Similarity(a) => commands::similarity(&a),
        Command::Reconstruct(a) => commands::reconstruct(&a),
        Command::RmsMap(a) => commands::rms_map(&a),
        Command::Throughput(a) => commands::throughput(&a),
        Command::Run(a) => commands::run(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
