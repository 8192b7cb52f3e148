use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::eval::DEFAULT_K;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    Adam,
    Sgd,
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OptimizerKind::Adam => "adam",
            OptimizerKind::Sgd => "sgd",
        })
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adam" => Ok(OptimizerKind::Adam),
            "sgd" => Ok(OptimizerKind::Sgd),
            other => Err(Error::InvalidArgument(format!("unknown optimizer {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    pub epochs: usize,
    /// Sampled negatives per observed pair.
    pub negative_ratio: usize,
    pub seed: u64,
    /// Evaluate every this many epochs; 0 disables evaluation.
    pub eval_every: usize,
    /// Stop after this many evaluations without an HR improvement.
    pub patience: Option<usize>,
    pub k: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 256,
            learning_rate: 0.001,
            optimizer: OptimizerKind::Adam,
            epochs: 20,
            negative_ratio: 4,
            seed: 0,
            eval_every: 1,
            patience: None,
            k: DEFAULT_K,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch_size must be >= 1".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "learning_rate must be finite and >= 0, got {}",
                self.learning_rate
            )));
        }
        if self.k == 0 {
            return Err(Error::InvalidArgument("k must be >= 1".into()));
        }
        if self.patience == Some(0) {
            return Err(Error::InvalidArgument("patience must be >= 1".into()));
        }
        Ok(())
    }
}
