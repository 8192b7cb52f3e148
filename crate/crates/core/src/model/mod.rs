//! CFNet-rl, CFNet-ml and the fused model.
//!
//! Inputs are the training row of a user (the items it interacted with) and
//! the training column of an item (the users that interacted with it), both
//! as sorted index lists.

mod arch;
mod checkpoint;
mod fusion;
mod grads;
mod network;
mod params;

pub use arch::{ArchSpec, MlSpec, RlSpec, Variant};
pub use checkpoint::{
    load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_MAGIC,
    CHECKPOINT_VERSION,
};
pub use fusion::{fuse_pretrained, DEFAULT_ALPHA};
pub use grads::{Gradients, MlGrads, RlGrads, TowerGrad};
pub use network::{ForwardCache, Prediction};
pub use params::{MlParams, ModelParams, RlParams, Tower, INIT_STDDEV};
