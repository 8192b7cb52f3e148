use crate::error::{Error, Result};
use crate::kernel::{gather_rows_sum, scatter_rows_add, sigmoid, validate_indices, DenseLayer, Matrix};

use super::{Gradients, ModelParams, Tower, TowerGrad};

/// Score of one user-item pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub probability: f64,
    pub logit: f64,
}

impl Prediction {
    pub fn from_logit(logit: f64) -> Self {
        Self {
            probability: sigmoid(logit),
            logit,
        }
    }
}

/// Activations of a batch forward pass, consumed by [`ModelParams::backward`].
///
/// `users[b]` is the training row of the batch's `b`-th user (item indices)
/// and `items[b]` the training column of its item (user indices).
#[derive(Debug, Clone)]
pub struct ForwardCache<'a> {
    users: Vec<&'a [u32]>,
    items: Vec<&'a [u32]>,
    /// Per tower: projection output followed by each layer's output.
    rl: Option<(Vec<Matrix>, Vec<Matrix>)>,
    /// Concatenated embeddings followed by each layer's output.
    ml: Option<Vec<Matrix>>,
    logits: Vec<f64>,
}

impl ForwardCache<'_> {
    pub fn len(&self) -> usize {
        self.logits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.logits.is_empty()
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.logits.iter().map(|&z| sigmoid(z)).collect()
    }

    pub fn predictions(&self) -> impl Iterator<Item = Prediction> + '_ {
        self.logits.iter().map(|&z| Prediction::from_logit(z))
    }
}

fn check_supports(supports: &[&[u32]], bound: usize) -> Result<()> {
    // Rows come sorted from the interaction matrix, so the last entry bounds
    // the rest; `forward_pair` does the full check.
    for s in supports {
        if let Some(&last) = s.last() {
            if last as usize >= bound {
                return Err(Error::IndexOutOfRange {
                    index: last as usize,
                    bound,
                });
            }
        }
    }
    Ok(())
}

fn tower_forward(tower: &Tower, supports: &[&[u32]]) -> Result<Vec<Matrix>> {
    let mut a0 = Matrix::zeros(supports.len(), tower.projection.cols());
    gather_rows_sum(&tower.projection, supports, &mut a0);
    let mut acts = vec![a0];
    for layer in &tower.layers {
        let next = layer.forward_batch(acts.last().expect("non-empty"))?;
        acts.push(next);
    }
    Ok(acts)
}

/// Back through `layers` from the gradient w.r.t. the last activation to the
/// gradient w.r.t. `acts[0]`.
fn stack_backward(
    layers: &[DenseLayer],
    acts: &[Matrix],
    mut grad: Matrix,
    layer_grads: &mut [crate::kernel::LayerGrad],
) -> Result<Matrix> {
    for k in (0..layers.len()).rev() {
        grad = layers[k]
            .backward_batch(&acts[k], &acts[k + 1], grad, &mut layer_grads[k], true)?
            .expect("input gradient requested");
    }
    Ok(grad)
}

fn tower_backward(
    tower: &Tower,
    acts: &[Matrix],
    grad: Matrix,
    supports: &[&[u32]],
    tg: &mut TowerGrad,
) -> Result<()> {
    let g0 = stack_backward(&tower.layers, acts, grad, &mut tg.layers)?;
    scatter_rows_add(&g0, supports, &mut tg.projection);
    Ok(())
}

impl ModelParams {
    /// Batch forward pass. `users` and `items` are the interaction row and
    /// column of each pair; their indices must be sorted (as stored in an
    /// [`InteractionMatrix`](crate::data::InteractionMatrix)).
    pub fn forward<'a>(&self, users: &[&'a [u32]], items: &[&'a [u32]]) -> Result<ForwardCache<'a>> {
        if users.len() != items.len() {
            return Err(Error::DimensionMismatch {
                context: "batch users vs items",
                expected: users.len(),
                actual: items.len(),
            });
        }
        check_supports(users, self.arch.num_items)?;
        check_supports(items, self.arch.num_users)?;
        let b = users.len();
        let mut logits = vec![0.0; b];

        let rl = match &self.rl {
            Some(rl) => {
                let ua = tower_forward(&rl.user, users)?;
                let ia = tower_forward(&rl.item, items)?;
                let (p, q) = (ua.last().unwrap(), ia.last().unwrap());
                let w = &self.output[..p.cols()];
                for (r, z) in logits.iter_mut().enumerate() {
                    *z += p.row(r).iter().zip(q.row(r)).zip(w).map(|((a, b), w)| a * b * w).sum::<f64>();
                }
                Some((ua, ia))
            }
            None => None,
        };

        let ml = match &self.ml {
            Some(ml) => {
                let e = ml.user_embedding.cols();
                let mut pu = Matrix::zeros(b, e);
                let mut qi = Matrix::zeros(b, e);
                gather_rows_sum(&ml.user_embedding, users, &mut pu);
                gather_rows_sum(&ml.item_embedding, items, &mut qi);
                let mut a0 = Matrix::zeros(b, 2 * e);
                for r in 0..b {
                    let row = a0.row_mut(r);
                    row[..e].copy_from_slice(pu.row(r));
                    row[e..].copy_from_slice(qi.row(r));
                }
                let mut acts = vec![a0];
                for layer in &ml.layers {
                    let next = layer.forward_batch(acts.last().unwrap())?;
                    acts.push(next);
                }
                let last = acts.last().unwrap();
                let w = &self.output[self.rl_output_dim()..];
                for (r, z) in logits.iter_mut().enumerate() {
                    *z += last.row(r).iter().zip(w).map(|(a, w)| a * w).sum::<f64>();
                }
                Some(acts)
            }
            None => None,
        };

        Ok(ForwardCache {
            users: users.to_vec(),
            items: items.to_vec(),
            rl,
            ml,
            logits,
        })
    }

    /// Forward pass for one pair, with full index validation.
    pub fn forward_pair(&self, user_row: &[u32], item_col: &[u32]) -> Result<Prediction> {
        validate_indices(user_row, self.arch.num_items)?;
        validate_indices(item_col, self.arch.num_users)?;
        let cache = self.forward(&[user_row], &[item_col])?;
        Ok(Prediction::from_logit(cache.logits[0]))
    }

    /// Adds into `grads` the gradient of `Σ_b dlogits[b] · logit_b`.
    pub fn backward(&self, cache: &ForwardCache<'_>, dlogits: &[f64], grads: &mut Gradients) -> Result<()> {
        if dlogits.len() != cache.len() {
            return Err(Error::CacheMismatch(format!(
                "{} upstream gradients for a batch of {}",
                dlogits.len(),
                cache.len()
            )));
        }
        if cache.rl.is_some() != self.rl.is_some() || cache.ml.is_some() != self.ml.is_some() {
            return Err(Error::CacheMismatch("cache from a different architecture".into()));
        }
        let split = self.rl_output_dim();

        if let (Some(rl), Some((ua, ia)), Some(g)) = (&self.rl, &cache.rl, &mut grads.rl) {
            let (p, q) = (ua.last().unwrap(), ia.last().unwrap());
            let w = &self.output[..split];
            let d = w.len();
            let mut gp = Matrix::zeros(p.rows(), d);
            let mut gq = Matrix::zeros(q.rows(), d);
            for (r, &dz) in dlogits.iter().enumerate() {
                let (pr, qr) = (p.row(r), q.row(r));
                for k in 0..d {
                    grads.output[k] += dz * pr[k] * qr[k];
                }
                for (k, (gpk, gqk)) in gp.row_mut(r).iter_mut().zip(gq.row_mut(r)).enumerate() {
                    *gpk = dz * w[k] * qr[k];
                    *gqk = dz * w[k] * pr[k];
                }
            }
            tower_backward(&rl.user, ua, gp, &cache.users, &mut g.user)?;
            tower_backward(&rl.item, ia, gq, &cache.items, &mut g.item)?;
        }

        if let (Some(ml), Some(acts), Some(g)) = (&self.ml, &cache.ml, &mut grads.ml) {
            let last = acts.last().unwrap();
            let w = &self.output[split..];
            let mut gl = Matrix::zeros(last.rows(), w.len());
            for (r, &dz) in dlogits.iter().enumerate() {
                for (k, (&a, gk)) in last.row(r).iter().zip(gl.row_mut(r)).enumerate() {
                    grads.output[split + k] += dz * a;
                    *gk = dz * w[k];
                }
            }
            let g0 = stack_backward(&ml.layers, acts, gl, &mut g.layers)?;
            let e = ml.user_embedding.cols();
            let mut gu = Matrix::zeros(g0.rows(), e);
            let mut gi = Matrix::zeros(g0.rows(), e);
            for r in 0..g0.rows() {
                gu.row_mut(r).copy_from_slice(&g0.row(r)[..e]);
                gi.row_mut(r).copy_from_slice(&g0.row(r)[e..]);
            }
            scatter_rows_add(&gu, &cache.users, &mut g.user_embedding);
            scatter_rows_add(&gi, &cache.items, &mut g.item_embedding);
        }
        Ok(())
    }
}
