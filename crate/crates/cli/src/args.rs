use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use forme_core::imposition::UnitScheme;
use forme_core::profiling::BinStrategy;

#[derive(Debug, Parser)]
#[command(
    name = "forme",
    version,
    about = "Cluster running titles into the skeleton formes that printed them"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Worker threads for profiling and distances (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Log more (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cluster a book's units and write labels, distances and a report.
    Cluster(ClusterArgs),
    /// Score predicted labels against gold labels.
    Eval(EvalArgs),
    /// Draw a staircase plot of cluster labels in book order (SVG).
    Plot(PlotArgs),
    /// Tile title crops into a grid with one row per unit (PNG).
    Montage(MontageArgs),
    /// Generate a synthetic book from a JSON spec.
    Synth(SynthArgs),
    /// Compare unit schemes and random baselines on one book.
    Ablate(AblateArgs),
}

/// Settings shared by every command that clusters.
#[derive(Debug, Clone, Args)]
pub struct PipelineArgs {
    /// Quantization levels per title.
    #[arg(long, default_value_t = 5)]
    pub bins: usize,

    /// Binning of ink profiles: uniform, quantile or kmeans.
    #[arg(long, default_value = "quantile")]
    pub strategy: BinStrategy,

    /// Order of the norm combining per-position distances (`inf` for max).
    #[arg(long, default_value_t = 4.0)]
    pub p: f64,

    /// Neighbours per unit in the affinity graph.
    #[arg(long, default_value_t = 5)]
    pub knn: usize,

    /// Number of clusters (default: number of gold labels in the manifest).
    #[arg(long)]
    pub k: Option<usize>,

    #[arg(long, default_value_t = 17)]
    pub seed: u64,

    /// Run this many consecutive seeds starting at --seed and report means.
    #[arg(long, default_value_t = 1)]
    pub seeds: usize,

    /// Profile grayscale ink instead of Otsu-binarized ink.
    #[arg(long)]
    pub no_binarize: bool,

    /// Divide title distances by the longer title length.
    #[arg(long)]
    pub normalize: bool,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[arg(long)]
    pub manifest: PathBuf,

    /// Unit scheme: all_pages, recto_pages or sheet_sides.
    #[arg(long, default_value = "sheet_sides")]
    pub scheme: UnitScheme,

    /// Output directory.
    #[arg(short, long)]
    pub out: PathBuf,

    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// CSV of `unit_id,<gold label>`.
    #[arg(long)]
    pub gold: PathBuf,

    /// CSV of `unit_id,<predicted label>`.
    #[arg(long)]
    pub pred: PathBuf,

    /// Write the JSON report here.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// CSV of `unit_id,label`.
    #[arg(long)]
    pub labels: PathBuf,

    #[arg(long)]
    pub manifest: PathBuf,

    #[arg(long, default_value = "sheet_sides")]
    pub scheme: UnitScheme,

    /// Gold labels to draw in a second panel.
    #[arg(long)]
    pub gold: Option<PathBuf>,

    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MontageArgs {
    #[arg(long)]
    pub manifest: PathBuf,

    #[arg(long, default_value = "sheet_sides")]
    pub scheme: UnitScheme,

    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// JSON synthetic book spec.
    #[arg(long)]
    pub spec: PathBuf,

    #[arg(long, default_value_t = 17)]
    pub seed: u64,

    /// Output directory.
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[arg(long)]
    pub manifest: PathBuf,

    /// Output directory.
    #[arg(short, long)]
    pub out: PathBuf,

    #[command(flatten)]
    pub pipeline: PipelineArgs,
}
