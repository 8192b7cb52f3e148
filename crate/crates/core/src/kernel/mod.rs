//! Dense and sparse numerical primitives the models are assembled from.

mod gradcheck;
mod init;
mod layer;
mod matrix;
mod ops;
mod optim;
mod sparse;

pub use gradcheck::{finite_difference, relative_error, GRADCHECK_STEP};
pub use init::gaussian_init;
pub use layer::{Activation, DenseCache, DenseLayer, LayerGrad};
pub use matrix::{Matrix, Vector};
pub use ops::{elementwise_product, log_sigmoid, sigmoid, softplus};
pub use optim::{adam_step, sgd_step, AdamConfig, AdamState, GradView};
pub use sparse::{
    gather_rows_sum, scatter_rows_add, sparse_project_backward, sparse_project_forward,
    validate_indices, SparseGrad, SparseRowGrad,
};
