//! Binary cross-entropy training with negative sampling.

mod config;
mod history;
mod loss;
mod trainer;

pub use config::{OptimizerKind, TrainConfig};
pub use history::{EpochRecord, TrainHistory};
pub use loss::{bce_from_logit, bce_grad_logit, bce_loss};
pub(crate) use loss::bce_grad_from_logit;
pub use trainer::{
    epoch_instances, mean_loss, train, train_epoch, EpochStats, OptimizerState, RunKind, TrainOutcome,
};
