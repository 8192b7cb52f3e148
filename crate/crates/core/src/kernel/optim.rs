//! First-order optimizers over a list of flat parameter tensors.

use crate::error::{Error, Result};

use super::SparseRowGrad;

/// Gradient of one parameter tensor.
#[derive(Debug, Clone, Copy)]
pub enum GradView<'a> {
    Dense(&'a [f64]),
    /// Row-sparse gradient; rows not present are zero.
    Rows(&'a SparseRowGrad),
}

impl GradView<'_> {
    fn len(&self) -> usize {
        match self {
            GradView::Dense(g) => g.len(),
            GradView::Rows(g) => g.rows() * g.cols(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Moment estimates for every parameter tensor plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
    step: u64,
}

impl AdamState {
    pub fn new(config: AdamConfig, sizes: &[usize]) -> Self {
        Self {
            config,
            first: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            second: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            step: 0,
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }
}

fn check_shapes(params: &[&mut [f64]], grads: &[GradView]) -> Result<()> {
    if params.len() != grads.len() {
        return Err(Error::DimensionMismatch {
            context: "optimizer tensor count",
            expected: params.len(),
            actual: grads.len(),
        });
    }
    for (p, g) in params.iter().zip(grads) {
        if p.len() != g.len() {
            return Err(Error::DimensionMismatch {
                context: "optimizer tensor size",
                expected: p.len(),
                actual: g.len(),
            });
        }
    }
    Ok(())
}

fn check_lr(lr: f64) -> Result<()> {
    if lr.is_finite() && lr >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("learning rate must be >= 0, got {lr}")))
    }
}

/// One bias-corrected Adam update,
/// `θ ← θ − lr · m̂ / (√v̂ + ε)` with `m̂ = m / (1 − β1ᵗ)`, `v̂ = v / (1 − β2ᵗ)`.
///
/// Rows missing from a row-sparse gradient are updated with `g = 0`, exactly
/// as a dense optimizer would.
pub fn adam_step(
    params: &mut [&mut [f64]],
    grads: &[GradView],
    state: &mut AdamState,
    lr: f64,
) -> Result<()> {
    check_shapes(params, grads)?;
    check_lr(lr)?;
    if state.first.len() != params.len()
        || state.first.iter().zip(params.iter()).any(|(m, p)| m.len() != p.len())
    {
        return Err(Error::DimensionMismatch {
            context: "adam state",
            expected: params.len(),
            actual: state.first.len(),
        });
    }
    state.step += 1;
    let AdamConfig {
        beta1,
        beta2,
        epsilon,
    } = state.config;
    let t = state.step as i32;
    let bc1 = 1.0 - beta1.powi(t);
    let bc2 = 1.0 - beta2.powi(t);
    // lr·m̂/(√v̂+ε) == (lr·√bc2/bc1)·m/(√v + ε·√bc2)
    let step_size = lr * bc2.sqrt() / bc1;
    let eps_hat = epsilon * bc2.sqrt();

    for (k, (p, g)) in params.iter_mut().zip(grads).enumerate() {
        let m = &mut state.first[k];
        let v = &mut state.second[k];
        match g {
            GradView::Dense(g) => {
                update_dense(p, g, m, v, beta1, beta2, step_size, eps_hat);
            }
            GradView::Rows(g) => {
                let cols = g.cols();
                if cols == 0 {
                    continue;
                }
                for r in 0..g.rows() {
                    let span = r * cols..(r + 1) * cols;
                    let (pr, mr, vr) = (&mut p[span.clone()], &mut m[span.clone()], &mut v[span]);
                    match g.get(r) {
                        Some(gr) => update_dense(pr, gr, mr, vr, beta1, beta2, step_size, eps_hat),
                        None => update_zero(pr, mr, vr, beta1, beta2, step_size, eps_hat),
                    }
                }
            }
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn update_dense(
    p: &mut [f64],
    g: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    beta1: f64,
    beta2: f64,
    step_size: f64,
    eps_hat: f64,
) {
    for (((p, &g), m), v) in p.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        *p -= step_size * *m / (v.sqrt() + eps_hat);
    }
}

#[inline]
fn update_zero(
    p: &mut [f64],
    m: &mut [f64],
    v: &mut [f64],
    beta1: f64,
    beta2: f64,
    step_size: f64,
    eps_hat: f64,
) {
    for ((p, m), v) in p.iter_mut().zip(m.iter_mut()).zip(v.iter_mut()) {
        *m *= beta1;
        *v *= beta2;
        *p -= step_size * *m / (v.sqrt() + eps_hat);
    }
}

/// `θ ← θ − lr · g`. Row-sparse gradients only touch their rows.
pub fn sgd_step(params: &mut [&mut [f64]], grads: &[GradView], lr: f64) -> Result<()> {
    check_shapes(params, grads)?;
    check_lr(lr)?;
    for (p, g) in params.iter_mut().zip(grads) {
        match g {
            GradView::Dense(g) => {
                for (p, g) in p.iter_mut().zip(g.iter()) {
                    *p -= lr * g;
                }
            }
            GradView::Rows(g) => {
                let cols = g.cols();
                for (r, gr) in g.iter() {
                    for (p, g) in p[r * cols..(r + 1) * cols].iter_mut().zip(gr) {
                        *p -= lr * g;
                    }
                }
            }
        }
    }
    Ok(())
}
