pub mod data;
pub mod error;
pub mod eval;
pub mod kernel;
pub mod model;
pub mod pipeline;
pub mod rng;
pub mod train;

pub use error::{Error, Result};
