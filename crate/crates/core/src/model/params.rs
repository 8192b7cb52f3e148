use rand::Rng;

use crate::error::{Error, Result};
use crate::kernel::{gaussian_init, Activation, DenseLayer, Matrix, Vector};

use super::{ArchSpec, MlSpec, RlSpec};

/// Standard deviation of the Gaussian weight initialization.
pub const INIT_STDDEV: f64 = 0.01;

/// A bias-free sparse projection followed by ReLU layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Tower {
    /// `inputs × width`; row `j` is the contribution of interaction `j`.
    pub projection: Matrix,
    pub layers: Vec<DenseLayer>,
}

impl Tower {
    pub fn output_dim(&self) -> usize {
        self.layers
            .last()
            .map_or(self.projection.cols(), DenseLayer::out_dim)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RlParams {
    /// Input is the user's row of the interaction matrix (length N).
    pub user: Tower,
    /// Input is the item's column (length M).
    pub item: Tower,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlParams {
    /// `N × e`.
    pub user_embedding: Matrix,
    /// `M × e`.
    pub item_embedding: Matrix,
    pub layers: Vec<DenseLayer>,
}

/// All trainable parameters of one model, with its architecture.
///
/// `output` weighs the predictive vector: `p ⊙ q` for `rl`, the last MLP
/// activation for `ml`, and their concatenation (rl part first) for `fused`.
/// The output layer has no bias.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub arch: ArchSpec,
    pub rl: Option<RlParams>,
    pub ml: Option<MlParams>,
    pub output: Vector,
}

fn relu_stack<R: Rng + ?Sized>(
    input: usize,
    widths: &[usize],
    stddev: f64,
    rng: &mut R,
) -> Result<Vec<DenseLayer>> {
    let mut layers = Vec::with_capacity(widths.len());
    let mut prev = input;
    for &w in widths {
        let weight = gaussian_init(prev, w, 0.0, stddev, rng)?;
        layers.push(DenseLayer::new(weight, Vector::zeros(w), Activation::Relu)?);
        prev = w;
    }
    Ok(layers)
}

impl ModelParams {
    /// Gaussian `N(0, stddev²)` weights and zero biases.
    pub fn init<R: Rng + ?Sized>(arch: ArchSpec, stddev: f64, rng: &mut R) -> Result<Self> {
        arch.validate()?;
        let rl = match &arch.rl {
            Some(RlSpec {
                user_dims,
                item_dims,
            }) => {
                let user = Tower {
                    projection: gaussian_init(arch.num_items, user_dims[0], 0.0, stddev, rng)?,
                    layers: relu_stack(user_dims[0], &user_dims[1..], stddev, rng)?,
                };
                let item = Tower {
                    projection: gaussian_init(arch.num_users, item_dims[0], 0.0, stddev, rng)?,
                    layers: relu_stack(item_dims[0], &item_dims[1..], stddev, rng)?,
                };
                Some(RlParams { user, item })
            }
            None => None,
        };
        let ml = match &arch.ml {
            Some(MlSpec {
                embedding_dim,
                layer_dims,
            }) => Some(MlParams {
                user_embedding: gaussian_init(arch.num_items, *embedding_dim, 0.0, stddev, rng)?,
                item_embedding: gaussian_init(arch.num_users, *embedding_dim, 0.0, stddev, rng)?,
                layers: relu_stack(2 * embedding_dim, layer_dims, stddev, rng)?,
            }),
            None => None,
        };
        let output = gaussian_init(arch.output_dim(), 1, 0.0, stddev, rng)?
            .into_vec()
            .into();
        Ok(Self {
            arch,
            rl,
            ml,
            output,
        })
    }

    pub fn rl_output_dim(&self) -> usize {
        self.rl.as_ref().map_or(0, |r| r.user.output_dim())
    }

    /// Names and `(rows, cols)` of every tensor, in the declared order used by
    /// optimizers and checkpoints.
    pub fn tensor_specs(arch: &ArchSpec) -> Vec<(String, (usize, usize))> {
        let mut out = Vec::new();
        let stack = |prefix: &str, input: usize, widths: &[usize], out: &mut Vec<_>| {
            let mut prev = input;
            for (k, &w) in widths.iter().enumerate() {
                out.push((format!("{prefix}.layer{k}.weight"), (prev, w)));
                out.push((format!("{prefix}.layer{k}.bias"), (1, w)));
                prev = w;
            }
        };
        if let Some(rl) = &arch.rl {
            out.push(("rl.user.projection".into(), (arch.num_items, rl.user_dims[0])));
            stack("rl.user", rl.user_dims[0], &rl.user_dims[1..], &mut out);
            out.push(("rl.item.projection".into(), (arch.num_users, rl.item_dims[0])));
            stack("rl.item", rl.item_dims[0], &rl.item_dims[1..], &mut out);
        }
        if let Some(ml) = &arch.ml {
            out.push(("ml.user.embedding".into(), (arch.num_items, ml.embedding_dim)));
            out.push(("ml.item.embedding".into(), (arch.num_users, ml.embedding_dim)));
            stack("ml", 2 * ml.embedding_dim, &ml.layer_dims, &mut out);
        }
        out.push(("output".into(), (arch.output_dim(), 1)));
        out
    }

    /// Every tensor as a flat slice, in [`ModelParams::tensor_specs`] order.
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        fn layers<'a>(ls: &'a [DenseLayer], out: &mut Vec<&'a [f64]>) {
            for l in ls {
                out.push(l.weight.as_slice());
                out.push(&l.bias[..]);
            }
        }
        if let Some(rl) = &self.rl {
            out.push(rl.user.projection.as_slice());
            layers(&rl.user.layers, &mut out);
            out.push(rl.item.projection.as_slice());
            layers(&rl.item.layers, &mut out);
        }
        if let Some(ml) = &self.ml {
            out.push(ml.user_embedding.as_slice());
            out.push(ml.item_embedding.as_slice());
            layers(&ml.layers, &mut out);
        }
        out.push(&self.output[..]);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        fn layers<'a>(ls: &'a mut [DenseLayer], out: &mut Vec<&'a mut [f64]>) {
            for l in ls {
                out.push(l.weight.as_mut_slice());
                out.push(&mut l.bias[..]);
            }
        }
        if let Some(rl) = &mut self.rl {
            out.push(rl.user.projection.as_mut_slice());
            layers(&mut rl.user.layers, &mut out);
            out.push(rl.item.projection.as_mut_slice());
            layers(&mut rl.item.layers, &mut out);
        }
        if let Some(ml) = &mut self.ml {
            out.push(ml.user_embedding.as_mut_slice());
            out.push(ml.item_embedding.as_mut_slice());
            layers(&mut ml.layers, &mut out);
        }
        out.push(&mut self.output[..]);
        out
    }

    pub fn tensor_sizes(&self) -> Vec<usize> {
        self.tensors().iter().map(|t| t.len()).collect()
    }

    pub fn num_parameters(&self) -> usize {
        self.tensor_sizes().iter().sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    /// Rebuilds parameters from flat tensors in declared order.
    pub fn from_tensors(arch: ArchSpec, tensors: Vec<Vec<f64>>) -> Result<Self> {
        arch.validate()?;
        let specs = Self::tensor_specs(&arch);
        if specs.len() != tensors.len() {
            return Err(Error::ArchMismatch(format!(
                "expected {} tensors, got {}",
                specs.len(),
                tensors.len()
            )));
        }
        let mut it = specs.into_iter().zip(tensors);
        let mut next_matrix = || -> Result<Matrix> {
            let ((name, (r, c)), data) = it.next().expect("counted above");
            if data.len() != r * c {
                return Err(Error::ShapeMismatch {
                    name,
                    expected: (r, c),
                    found: (data.len() / c.max(1), c),
                });
            }
            Matrix::from_vec(r, c, data)
        };
        fn stack(
            n: usize,
            next: &mut dyn FnMut() -> Result<Matrix>,
        ) -> Result<Vec<DenseLayer>> {
            (0..n)
                .map(|_| {
                    let w = next()?;
                    let b = next()?.into_vec().into();
                    DenseLayer::new(w, b, Activation::Relu)
                })
                .collect()
        }
        let rl = match &arch.rl {
            Some(spec) => {
                let projection = next_matrix()?;
                let layers = stack(spec.user_dims.len() - 1, &mut next_matrix)?;
                let user = Tower { projection, layers };
                let projection = next_matrix()?;
                let layers = stack(spec.item_dims.len() - 1, &mut next_matrix)?;
                Some(RlParams {
                    user,
                    item: Tower { projection, layers },
                })
            }
            None => None,
        };
        let ml = match &arch.ml {
            Some(spec) => Some(MlParams {
                user_embedding: next_matrix()?,
                item_embedding: next_matrix()?,
                layers: stack(spec.layer_dims.len(), &mut next_matrix)?,
            }),
            None => None,
        };
        let output = next_matrix()?.into_vec().into();
        Ok(Self {
            arch,
            rl,
            ml,
            output,
        })
    }
}
