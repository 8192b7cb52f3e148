use crate::error::{Error, Result};

use super::{Matrix, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Identity => x,
        }
    }

    /// Derivative given the pre-activation. ReLU at exactly zero is zero.
    #[inline]
    fn derivative(self, pre: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

/// One perceptron layer `a(Wᵀx + b)` with `W` stored `in_dim × out_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weight: Matrix,
    pub bias: Vector,
    pub activation: Activation,
}

/// What a single-input forward pass keeps for the backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseCache {
    pub input: Vector,
    pub pre_activation: Vector,
}

/// Gradient of a loss with respect to one layer's weight and bias.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weight: Matrix,
    pub bias: Vector,
}

impl LayerGrad {
    pub fn zeros_like(layer: &DenseLayer) -> Self {
        Self {
            weight: Matrix::zeros(layer.in_dim(), layer.out_dim()),
            bias: Vector::zeros(layer.out_dim()),
        }
    }

    pub fn clear(&mut self) {
        self.weight.fill(0.0);
        self.bias.iter_mut().for_each(|b| *b = 0.0);
    }

    pub fn add_assign(&mut self, other: &LayerGrad) {
        self.weight
            .add_assign(&other.weight)
            .expect("layer gradient shapes agree");
        for (a, b) in self.bias.iter_mut().zip(other.bias.iter()) {
            *a += b;
        }
    }
}

impl DenseLayer {
    pub fn new(weight: Matrix, bias: Vector, activation: Activation) -> Result<Self> {
        if bias.len() != weight.cols() {
            return Err(Error::DimensionMismatch {
                context: "dense layer bias",
                expected: weight.cols(),
                actual: bias.len(),
            });
        }
        Ok(Self {
            weight,
            bias,
            activation,
        })
    }

    #[inline]
    pub fn in_dim(&self) -> usize {
        self.weight.rows()
    }

    #[inline]
    pub fn out_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn forward(&self, input: &[f64]) -> Result<(Vector, DenseCache)> {
        if input.len() != self.in_dim() {
            return Err(Error::DimensionMismatch {
                context: "dense forward input",
                expected: self.in_dim(),
                actual: input.len(),
            });
        }
        let mut pre = self.bias.clone();
        for (i, &x) in input.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            for (p, w) in pre.iter_mut().zip(self.weight.row(i)) {
                *p += x * w;
            }
        }
        let out: Vec<f64> = pre.iter().map(|&z| self.activation.apply(z)).collect();
        Ok((
            out.into(),
            DenseCache {
                input: input.into(),
                pre_activation: pre,
            },
        ))
    }

    /// Returns `(grad_input, grad_weight_and_bias)`.
    pub fn backward(&self, cache: &DenseCache, grad_output: &[f64]) -> Result<(Vector, LayerGrad)> {
        if grad_output.len() != self.out_dim() {
            return Err(Error::DimensionMismatch {
                context: "dense backward grad_output",
                expected: self.out_dim(),
                actual: grad_output.len(),
            });
        }
        if cache.input.len() != self.in_dim() || cache.pre_activation.len() != self.out_dim() {
            return Err(Error::CacheMismatch(format!(
                "cache shapes ({}, {}) vs layer {}x{}",
                cache.input.len(),
                cache.pre_activation.len(),
                self.in_dim(),
                self.out_dim()
            )));
        }
        let dz: Vec<f64> = grad_output
            .iter()
            .zip(cache.pre_activation.iter())
            .map(|(&g, &z)| g * self.activation.derivative(z))
            .collect();
        let mut grad_weight = Matrix::zeros(self.in_dim(), self.out_dim());
        let mut grad_input = Vector::zeros(self.in_dim());
        for (i, &x) in cache.input.iter().enumerate() {
            let wrow = self.weight.row(i);
            grad_input[i] = wrow.iter().zip(&dz).map(|(w, d)| w * d).sum();
            for (gw, d) in grad_weight.row_mut(i).iter_mut().zip(&dz) {
                *gw = x * d;
            }
        }
        Ok((
            grad_input,
            LayerGrad {
                weight: grad_weight,
                bias: dz.into(),
            },
        ))
    }

    /// Forward pass over a batch laid out one instance per row.
    pub fn forward_batch(&self, input: &Matrix) -> Result<Matrix> {
        if input.cols() != self.in_dim() {
            return Err(Error::DimensionMismatch {
                context: "dense batch forward input",
                expected: self.in_dim(),
                actual: input.cols(),
            });
        }
        let mut out = Matrix::zeros(input.rows(), self.out_dim());
        for r in 0..input.rows() {
            out.row_mut(r).copy_from_slice(&self.bias);
        }
        input.matmul_into(&self.weight, 1.0, &mut out);
        if self.activation == Activation::Relu {
            out.as_mut_slice().iter_mut().for_each(|v| *v = v.max(0.0));
        }
        Ok(out)
    }

    /// Batch backward pass. `output` is what [`DenseLayer::forward_batch`]
    /// returned for `input`; ReLU masks are recovered from it since
    /// `relu(z) > 0` exactly when `z > 0`. Gradients are *added* into `grad`.
    pub fn backward_batch(
        &self,
        input: &Matrix,
        output: &Matrix,
        mut grad_output: Matrix,
        grad: &mut LayerGrad,
        want_input_grad: bool,
    ) -> Result<Option<Matrix>> {
        if input.cols() != self.in_dim()
            || output.cols() != self.out_dim()
            || grad_output.shape() != output.shape()
            || input.rows() != output.rows()
        {
            return Err(Error::CacheMismatch(format!(
                "batch shapes input {:?}, output {:?}, grad {:?} vs layer {}x{}",
                input.shape(),
                output.shape(),
                grad_output.shape(),
                self.in_dim(),
                self.out_dim()
            )));
        }
        if self.activation == Activation::Relu {
            for (g, &a) in grad_output
                .as_mut_slice()
                .iter_mut()
                .zip(output.as_slice())
            {
                if a <= 0.0 {
                    *g = 0.0;
                }
            }
        }
        input.tr_matmul_into(&grad_output, 1.0, &mut grad.weight);
        for r in 0..grad_output.rows() {
            for (b, g) in grad.bias.iter_mut().zip(grad_output.row(r)) {
                *b += g;
            }
        }
        if !want_input_grad {
            return Ok(None);
        }
        let mut grad_input = Matrix::zeros(input.rows(), self.in_dim());
        grad_output.matmul_tr_into(&self.weight, 0.0, &mut grad_input);
        Ok(Some(grad_input))
    }
}
