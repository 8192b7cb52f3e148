use crate::error::{Error, Result};

use super::{ArchSpec, ModelParams, Variant};

/// Default trade-off between the two pre-trained output weights.
pub const DEFAULT_ALPHA: f64 = 0.5;

/// Builds a fused model from pre-trained `rl` and `ml` models. Every body
/// parameter is copied; the output weight becomes `[α·w_rl ; (1−α)·w_ml]`.
pub fn fuse_pretrained(rl: &ModelParams, ml: &ModelParams, alpha: f64) -> Result<ModelParams> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!("alpha {alpha} outside [0, 1]")));
    }
    if rl.arch.variant() != Variant::Rl {
        return Err(Error::ArchMismatch(format!(
            "first model is {}, expected rl",
            rl.arch.variant()
        )));
    }
    if ml.arch.variant() != Variant::Ml {
        return Err(Error::ArchMismatch(format!(
            "second model is {}, expected ml",
            ml.arch.variant()
        )));
    }
    if (rl.arch.num_users, rl.arch.num_items) != (ml.arch.num_users, ml.arch.num_items) {
        return Err(Error::ArchMismatch(format!(
            "rl trained on {}x{}, ml on {}x{}",
            rl.arch.num_users, rl.arch.num_items, ml.arch.num_users, ml.arch.num_items
        )));
    }
    let arch = ArchSpec {
        num_users: rl.arch.num_users,
        num_items: rl.arch.num_items,
        rl: rl.arch.rl.clone(),
        ml: ml.arch.ml.clone(),
    };
    let output: Vec<f64> = rl
        .output
        .iter()
        .map(|w| alpha * w)
        .chain(ml.output.iter().map(|w| (1.0 - alpha) * w))
        .collect();
    Ok(ModelParams {
        arch,
        rl: rl.rl.clone(),
        ml: ml.ml.clone(),
        output: output.into(),
    })
}
