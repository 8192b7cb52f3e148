use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Exit codes: 0 success, 1 validation error, 2 runtime failure.
#[derive(Debug, Parser)]
#[command(name = "deepcf", version, about = "Train and evaluate DeepCF recommenders on implicit feedback")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a raw rating log into canonical train/test/negative files.
    Prepare(PrepareArgs),
    /// Train one model variant and write checkpoint, log and report.
    Train(TrainArgs),
    /// Evaluate a checkpoint, or the ItemPop baseline, on a prepared dataset.
    Evaluate(EvaluateArgs),
    /// Train one model per value of a hyper-parameter.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct PrepareArgs {
    /// Raw rating file.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output prefix `<dir>/<name>` of the canonical files.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// `double-colon` (MovieLens `::`) or `tsv`.
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long)]
    pub min_user: Option<usize>,
    #[arg(long)]
    pub min_item: Option<usize>,
    /// Fraction of users to keep, in (0, 1].
    #[arg(long)]
    pub user_fraction: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for the manifest; defaults to the dataset directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Options shared by `train` and `sweep`.
#[derive(Debug, Args)]
pub struct RunArgs {
    /// Prefix `<dir>/<name>` of a prepared dataset.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// rl, ml, fused or fused-scratch.
    #[arg(long)]
    pub variant: Option<String>,
    /// Predictive factors d.
    #[arg(long)]
    pub factors: Option<usize>,
    /// Negatives sampled per positive.
    #[arg(long)]
    pub neg_ratio: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub k: Option<usize>,
    /// Evaluate every N epochs; 0 disables evaluation during training.
    #[arg(long)]
    pub eval_every: Option<usize>,
    /// Stop after this many evaluations without HR improvement.
    #[arg(long)]
    pub patience: Option<usize>,
    /// Weight of the rl output when fusing pre-trained models.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Pre-trained rl checkpoint (required for `fused`).
    #[arg(long)]
    pub rl_checkpoint: Option<PathBuf>,
    /// Pre-trained ml checkpoint (required for `fused`).
    #[arg(long)]
    pub ml_checkpoint: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long, conflicts_with = "itempop")]
    pub checkpoint: Option<PathBuf>,
    /// Score with training-set item popularity instead of a model.
    #[arg(long)]
    pub itempop: bool,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// neg-ratio or factors.
    #[arg(long)]
    pub axis: Option<String>,
    /// Comma-separated values, e.g. `8,16,32,64`.
    #[arg(long)]
    pub values: Option<String>,
    /// Fine-tuning epochs for `fused` cells.
    #[arg(long)]
    pub finetune_epochs: Option<usize>,
    /// Fine-tuning SGD learning rate for `fused` cells.
    #[arg(long)]
    pub finetune_lr: Option<f64>,
    /// Cells trained concurrently.
    #[arg(long)]
    pub jobs: Option<usize>,
}
