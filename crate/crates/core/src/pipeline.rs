//! End-to-end steps shared by the command-line tool and the acceptance
//! suite: dataset preparation, training runs, artifact files and sweeps.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use log::{info, warn};

use crate::data::{
    build_split, filter_k_core, load_ratings, read_canonical, sample_test_negatives, write_canonical,
    CanonicalDataset, DatasetFiles, DatasetStats, RatingFormat, RatingLog, TEST_NEGATIVES,
};
use crate::error::{Error, Result};
use crate::model::{save_checkpoint, ModelParams, DEFAULT_ALPHA};
use crate::rng::{derive_seed, Stream};
use crate::train::{train, OptimizerKind, RunKind, TrainConfig, TrainOutcome};

#[derive(Debug, Clone, PartialEq)]
pub struct PrepareOptions {
    pub format: RatingFormat,
    /// Minimum interactions per user; 0 together with `min_item == 0` skips
    /// the k-core filter.
    pub min_user: usize,
    pub min_item: usize,
    /// Keep this fraction of users (chosen by a seeded hash of the token).
    pub user_fraction: f64,
    pub seed: u64,
    pub test_negatives: usize,
}

impl Default for PrepareOptions {
    fn default() -> Self {
        Self {
            format: RatingFormat::DoubleColon,
            min_user: 20,
            min_item: 5,
            user_fraction: 1.0,
            seed: 0,
            test_negatives: TEST_NEGATIVES,
        }
    }
}

fn keep_user(token: &str, fraction: f64, seed: u64) -> bool {
    // FNV-1a over the token, mixed with the seed; stable across platforms.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in token.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    let u = derive_seed(seed ^ h, Stream::Misc, 0);
    ((u >> 11) as f64 / (1u64 << 53) as f64) < fraction
}

/// Parses a raw rating file, filters, splits, samples the fixed test
/// negatives and writes the canonical files plus a stats file.
pub fn prepare(input: &Path, files: &DatasetFiles, opts: &PrepareOptions) -> Result<DatasetStats> {
    if !(opts.user_fraction > 0.0 && opts.user_fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "user fraction {} outside (0, 1]",
            opts.user_fraction
        )));
    }
    let mut log = load_ratings(input, opts.format)?;
    info!("read {} ratings from {}", log.len(), input.display());
    if opts.user_fraction < 1.0 {
        log = RatingLog {
            records: log
                .records
                .into_iter()
                .filter(|r| keep_user(&r.user, opts.user_fraction, opts.seed))
                .collect(),
        };
        info!("kept {} ratings after user subsampling", log.len());
    }
    if opts.min_user > 0 || opts.min_item > 0 {
        log = filter_k_core(&log, opts.min_user.max(1), opts.min_item.max(1))?;
        info!("{} ratings after k-core filtering", log.len());
    }
    let (_, split) = build_split(&log)?;
    let tests = sample_test_negatives(
        &split,
        opts.test_negatives,
        &mut crate::rng::derive(opts.seed, Stream::TestNegatives, 0),
    )?;
    write_canonical(files, &split, &tests)?;
    Ok(DatasetStats::of(&split))
}

pub fn load_dataset(files: &DatasetFiles) -> Result<CanonicalDataset> {
    if !files.exist() {
        return Err(Error::InvalidArgument(format!(
            "canonical files missing: {}",
            files.train.display()
        )));
    }
    read_canonical(files)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunVariant {
    Rl,
    Ml,
    /// Fused model initialized from pre-trained rl and ml, tuned with SGD.
    Fused,
    /// Fused model trained with Adam from random initialization.
    FusedScratch,
}

impl fmt::Display for RunVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RunVariant::Rl => "rl",
            RunVariant::Ml => "ml",
            RunVariant::Fused => "fused",
            RunVariant::FusedScratch => "fused-scratch",
        })
    }
}

impl FromStr for RunVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rl" => Ok(RunVariant::Rl),
            "ml" => Ok(RunVariant::Ml),
            "fused" => Ok(RunVariant::Fused),
            "fused-scratch" | "fused_scratch" => Ok(RunVariant::FusedScratch),
            other => Err(Error::InvalidArgument(format!(
                "unknown variant {other:?} (expected rl, ml, fused or fused-scratch)"
            ))),
        }
    }
}

/// Default SGD learning rate for fine-tuning a fused pre-trained model.
pub const FINETUNE_LR: f64 = 0.01;

impl RunVariant {
    pub fn optimizer(self) -> OptimizerKind {
        match self {
            RunVariant::Fused => OptimizerKind::Sgd,
            _ => OptimizerKind::Adam,
        }
    }

    pub fn default_learning_rate(self) -> f64 {
        match self {
            RunVariant::Fused => FINETUNE_LR,
            _ => TrainConfig::default().learning_rate,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub variant: RunVariant,
    pub predictive_dim: usize,
    /// Optimizer is overridden by the variant.
    pub train: TrainConfig,
    pub alpha: f64,
}

impl Default for RunSpec {
    fn default() -> Self {
        Self {
            variant: RunVariant::Fused,
            predictive_dim: 64,
            train: TrainConfig::default(),
            alpha: DEFAULT_ALPHA,
        }
    }
}

impl RunSpec {
    pub fn effective_config(&self) -> TrainConfig {
        TrainConfig {
            optimizer: self.variant.optimizer(),
            ..self.train.clone()
        }
    }
}

/// One training run. `Fused` needs the pre-trained sub-models.
pub fn run(
    ds: &CanonicalDataset,
    spec: &RunSpec,
    pretrained: Option<(ModelParams, ModelParams)>,
) -> Result<TrainOutcome> {
    if spec.predictive_dim == 0 {
        return Err(Error::InvalidArgument("predictive dim must be >= 1".into()));
    }
    let kind = match (spec.variant, pretrained) {
        (RunVariant::Rl, _) => RunKind::Rl,
        (RunVariant::Ml, _) => RunKind::Ml,
        (RunVariant::FusedScratch, _) => RunKind::FusedScratch,
        (RunVariant::Fused, Some((rl, ml))) => RunKind::FusedPretrained {
            rl: Box::new(rl),
            ml: Box::new(ml),
            alpha: spec.alpha,
        },
        (RunVariant::Fused, None) => {
            return Err(Error::InvalidArgument(
                "fused training needs pre-trained rl and ml models".into(),
            ))
        }
    };
    let config = spec.effective_config();
    let params = kind.initial_params(&ds.split.train, spec.predictive_dim, config.seed)?;
    info!(
        "training {} (d={}, {} parameters) with {}",
        spec.variant,
        spec.predictive_dim,
        params.num_parameters(),
        config.optimizer
    );
    train(params, &ds.split.train, &ds.tests, &config)
}

/// Outcomes of the pre-train, pre-train, fuse and fine-tune chain.
#[derive(Debug, Clone)]
pub struct PretrainedChain {
    pub rl: TrainOutcome,
    pub ml: TrainOutcome,
    pub fused: TrainOutcome,
}

/// Trains rl and ml with `spec.train`, fuses their best checkpoints and
/// fine-tunes with SGD under `finetune`.
pub fn run_pretrained_chain(
    ds: &CanonicalDataset,
    spec: &RunSpec,
    finetune: &TrainConfig,
) -> Result<PretrainedChain> {
    let rl = run(ds, &RunSpec { variant: RunVariant::Rl, ..spec.clone() }, None)?;
    let ml = run(ds, &RunSpec { variant: RunVariant::Ml, ..spec.clone() }, None)?;
    let fused_spec = RunSpec {
        variant: RunVariant::Fused,
        train: finetune.clone(),
        ..spec.clone()
    };
    let fused = run(ds, &fused_spec, Some((rl.params.clone(), ml.params.clone())))?;
    Ok(PretrainedChain { rl, ml, fused })
}

/// Writes `<name>.ckpt`, `<name>.log`, `<name>.timing` and, when the run was
/// evaluated, `<name>.report` into `dir`.
pub fn write_run(dir: &Path, name: &str, outcome: &TrainOutcome, dataset: &str, seed: u64) -> Result<()> {
    fs::create_dir_all(dir)?;
    save_checkpoint(&outcome.params, &dir.join(format!("{name}.ckpt")))?;
    fs::write(dir.join(format!("{name}.log")), outcome.history.to_log())?;
    fs::write(dir.join(format!("{name}.timing")), outcome.history.to_timing())?;
    if let Some(report) = &outcome.report {
        let text = report.clone().with_meta(name, dataset, seed).to_text();
        fs::write(dir.join(format!("{name}.report")), text)?;
    }
    Ok(())
}

/// Resolved configuration of a command, written as `manifest.txt`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        let mut m = Self::default();
        m.set("version", env!("CARGO_PKG_VERSION"));
        m.set("command", command);
        m
    }

    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        let value = value.to_string();
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(e) => e.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn to_text(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("manifest.txt"), self.to_text())?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    NegativeRatio,
    PredictiveDim,
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepAxis::NegativeRatio => "neg_ratio",
            SweepAxis::PredictiveDim => "factors",
        })
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "neg_ratio" | "neg-ratio" | "negative_ratio" => Ok(SweepAxis::NegativeRatio),
            "factors" | "predictive_dim" => Ok(SweepAxis::PredictiveDim),
            other => Err(Error::InvalidArgument(format!("unknown sweep axis {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub value: usize,
    /// `(HR@K, NDCG@K)` of the kept parameters, or why the cell failed.
    pub result: std::result::Result<(f64, f64), String>,
}

/// Trains and evaluates one model per value on the shared split and seed.
/// `Fused` runs the whole pre-training chain per cell. Failed cells are
/// recorded, not fatal.
pub fn sweep(
    ds: &CanonicalDataset,
    base: &RunSpec,
    finetune: &TrainConfig,
    axis: SweepAxis,
    values: &[usize],
) -> Vec<SweepCell> {
    values
        .iter()
        .map(|&value| {
            let mut spec = base.clone();
            let mut fine = finetune.clone();
            match axis {
                SweepAxis::NegativeRatio => {
                    spec.train.negative_ratio = value;
                    fine.negative_ratio = value;
                }
                SweepAxis::PredictiveDim => spec.predictive_dim = value,
            }
            let outcome = if spec.variant == RunVariant::Fused {
                run_pretrained_chain(ds, &spec, &fine).map(|c| c.fused)
            } else {
                run(ds, &spec, None)
            };
            let result = outcome.and_then(|o| {
                o.report
                    .map(|r| (r.hr, r.ndcg))
                    .ok_or_else(|| Error::InvalidArgument("run was not evaluated".into()))
            });
            if let Err(e) = &result {
                warn!("sweep cell {axis}={value} failed: {e}");
            }
            SweepCell {
                value,
                result: result.map_err(|e| e.to_string()),
            }
        })
        .collect()
}

pub fn sweep_table(axis: SweepAxis, k: usize, cells: &[SweepCell]) -> String {
    let mut s = format!("{axis}\thr@{k}\tndcg@{k}\n");
    for c in cells {
        match &c.result {
            Ok((hr, ndcg)) => s += &format!("{}\t{hr:.6}\t{ndcg:.6}\n", c.value),
            Err(e) => s += &format!("{}\tFAILED\t{}\n", c.value, e.replace(['\t', '\n'], " ")),
        }
    }
    s
}

/// Long-format series for plotting: `axis \t value \t metric \t score`.
pub fn sweep_series(axis: SweepAxis, k: usize, cells: &[SweepCell]) -> String {
    let mut s = String::new();
    for c in cells {
        if let Ok((hr, ndcg)) = c.result {
            s += &format!("{axis}\t{}\thr@{k}\t{hr:.6}\n", c.value);
            s += &format!("{axis}\t{}\tndcg@{k}\t{ndcg:.6}\n", c.value);
        }
    }
    s
}
