use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use robustline::evaluation::TrainCondition;
use robustline::features::FeatureType;
use robustline::models::ModelSpec;

#[derive(Debug, Parser)]
#[command(name = "robustline", version, about = "Noise-robustness benchmarking for small keyword classifiers")]
pub struct Cli {
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every command that resolves an experiment config.
#[derive(Debug, Args, Clone, Default)]
pub struct ConfigArgs {
    /// TOML experiment config; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub feature: Option<FeatureType>,
    #[arg(long)]
    pub epochs: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the synthetic corpus, its noise banks and manifests as files.
    Synth(ConfigArgs),
    /// Build the env, imp and env+imp noisy versions of a manifest.
    Corrupt(CorruptArgs),
    /// Extract features for every entry of a manifest.
    Featurize(FeaturizeArgs),
    /// Train one model variant on one condition.
    Train(TrainArgs),
    /// Score a checkpoint on every registered test set.
    Evaluate(EvaluateArgs),
    /// Train and evaluate the configured model grid.
    Grid(GridArgs),
    /// Compute F, R and ID/OOD regressions from a results table.
    Analyze(AnalyzeArgs),
    /// Draw an ID versus OOD accuracy scatter plot.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct CorruptArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub env_noise: PathBuf,
    #[arg(long)]
    pub imp_noise: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = -5.0, allow_hyphen_values = true)]
    pub snr_min: f64,
    #[arg(long, default_value_t = 25.0, allow_hyphen_values = true)]
    pub snr_max: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 16_000)]
    pub sample_rate: u32,
}

#[derive(Debug, Args)]
pub struct FeaturizeArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "mel")]
    pub feature: FeatureType,
    /// Config supplying the feature settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: ConfigArgs,
    /// Variant id, e.g. DNN-x0.25-full.
    #[arg(long)]
    pub model: ModelSpec,
    #[arg(long, default_value = "clean")]
    pub condition: TrainCondition,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub common: ConfigArgs,
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Condition recorded in the result rows.
    #[arg(long, default_value = "clean")]
    pub condition: TrainCondition,
    /// Label sidecar; defaults to the checkpoint path with a `.labels` extension.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Results CSV; stdout when absent.
    #[arg(long)]
    pub results: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[command(flatten)]
    pub common: ConfigArgs,
    #[arg(long, env = "ROBUSTLINE_WORKERS")]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub results: PathBuf,
    #[arg(long)]
    pub baseline: TrainCondition,
    #[arg(long)]
    pub other: TrainCondition,
    #[arg(long, default_value = "clean")]
    pub id_set: String,
    #[arg(long, default_value_t = 1e-6)]
    pub epsilon: f64,
    /// Drop near-zero baseline degradations instead of clamping them.
    #[arg(long)]
    pub exclude: bool,
    /// Report CSV; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub results: PathBuf,
    #[arg(long)]
    pub test_set: String,
    #[arg(long, default_value = "clean")]
    pub id_set: String,
    /// Conditions to draw; all present when absent.
    #[arg(long, value_delimiter = ',')]
    pub conditions: Vec<TrainCondition>,
    /// SVG path; the point table goes next to it with a `.csv` extension.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub no_fit: bool,
    #[arg(long, default_value = "")]
    pub title: String,
}
