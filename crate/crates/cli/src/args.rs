use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "evoimage", version, about = "Evolutionary image transition and painting")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve a source image into a target image.
    Transition(TransitionArgs),
    /// Paint a target image with biased random walks.
    Paint(PaintArgs),
    /// Compute aesthetic features for a directory of PNG frames.
    Analyze(AnalyzeArgs),
    /// Generate synthetic test images.
    Synth(SynthArgs),
}

/// Options shared by `transition` and `paint`. Every option may also come
/// from `--config`; flags win.
#[derive(Debug, Args, Default)]
pub struct CommonRunArgs {
    /// Starting image (PNG).
    #[arg(long)]
    pub src: Option<PathBuf>,
    /// Target image (PNG).
    #[arg(long)]
    pub dst: Option<PathBuf>,
    #[arg(long)]
    pub cs: Option<f64>,
    /// Walk bias; a comma-separated list runs a sweep.
    #[arg(long, value_delimiter = ',')]
    pub alpha: Vec<f64>,
    /// Walk length; a comma-separated list runs a sweep.
    #[arg(long, value_delimiter = ',')]
    pub tmax: Vec<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_gen: Option<u64>,
    /// Write a frame every N generations.
    #[arg(long)]
    pub frame_every: Option<u64>,
    /// Also evaluate features every N generations (0: frames only).
    #[arg(long)]
    pub feature_every: Option<u64>,
    /// Milestone fractions, strictly increasing in (0, 1].
    #[arg(long, value_delimiter = ',')]
    pub milestones: Vec<f64>,
    /// Output directory (default: $EVOIMAGE_OUT/<command>-seed<seed>).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// key=value file with defaults for any option; a run manifest works too.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TransitionArgs {
    #[command(flatten)]
    pub common: CommonRunArgs,
    /// ea-asym, ea-uniform-walk, ea-biased-walk, ea-asym-uniform-walk, ea-asym-biased-walk
    #[arg(long)]
    pub op: Option<String>,
    #[arg(long)]
    pub ct: Option<f64>,
    #[arg(long)]
    pub tau: Option<u64>,
    /// Keep running the literal algorithm instead of setting the last
    /// <= c_t/2 source pixels directly.
    #[arg(long)]
    pub no_tail_completion: bool,
}

#[derive(Debug, Args)]
pub struct PaintArgs {
    #[command(flatten)]
    pub common: CommonRunArgs,
    /// Let walks paint over already painted pixels.
    #[arg(long)]
    pub repaint: bool,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Directory of PNG frames (or a run directory containing `frames/`).
    #[arg(long)]
    pub frames: PathBuf,
    /// CSV output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(subcommand)]
    pub kind: SynthKind,
}

#[derive(Debug, Subcommand)]
pub enum SynthKind {
    /// Single-color image.
    Solid {
        #[arg(long, default_value = "0,0,0")]
        rgb: String,
        #[arg(long, default_value = "200x200")]
        size: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Two-color checkerboard.
    Checkerboard {
        #[arg(long, default_value = "0,0,0")]
        rgb: String,
        #[arg(long, default_value = "255,255,255")]
        rgb2: String,
        #[arg(long, default_value_t = 8)]
        cell: usize,
        #[arg(long, default_value = "200x200")]
        size: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Uniformly random RGB pixels.
    Random {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "200x200")]
        size: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Grid of colored squares and a copy with the squares permuted;
    /// writes `color1.png` and `color2.png` into the output directory.
    SquaresPair {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "200x200")]
        size: String,
        /// Squares per side.
        #[arg(long, default_value_t = 4)]
        grid: usize,
        #[arg(long)]
        out: PathBuf,
    },
}
