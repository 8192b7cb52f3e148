use crate::kernel::{GradView, LayerGrad, SparseRowGrad, Vector};

use super::ModelParams;

#[derive(Debug, Clone)]
pub struct TowerGrad {
    pub projection: SparseRowGrad,
    pub layers: Vec<LayerGrad>,
}

#[derive(Debug, Clone)]
pub struct RlGrads {
    pub user: TowerGrad,
    pub item: TowerGrad,
}

#[derive(Debug, Clone)]
pub struct MlGrads {
    pub user_embedding: SparseRowGrad,
    pub item_embedding: SparseRowGrad,
    pub layers: Vec<LayerGrad>,
}

/// Gradient buffers shaped like a [`ModelParams`]. Projection and embedding
/// gradients are row-sparse.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub rl: Option<RlGrads>,
    pub ml: Option<MlGrads>,
    pub output: Vector,
}

impl Gradients {
    pub fn zeros(params: &ModelParams) -> Self {
        let tower = |t: &super::Tower| TowerGrad {
            projection: SparseRowGrad::new(t.projection.rows(), t.projection.cols()),
            layers: t.layers.iter().map(LayerGrad::zeros_like).collect(),
        };
        Self {
            rl: params.rl.as_ref().map(|rl| RlGrads {
                user: tower(&rl.user),
                item: tower(&rl.item),
            }),
            ml: params.ml.as_ref().map(|ml| MlGrads {
                user_embedding: SparseRowGrad::new(
                    ml.user_embedding.rows(),
                    ml.user_embedding.cols(),
                ),
                item_embedding: SparseRowGrad::new(
                    ml.item_embedding.rows(),
                    ml.item_embedding.cols(),
                ),
                layers: ml.layers.iter().map(LayerGrad::zeros_like).collect(),
            }),
            output: Vector::zeros(params.output.len()),
        }
    }

    pub fn clear(&mut self) {
        self.for_each_part(|s| s.clear(), |l| l.clear());
        self.output.iter_mut().for_each(|v| *v = 0.0);
    }

    pub fn scale(&mut self, alpha: f64) {
        self.for_each_part(
            |s| s.scale(alpha),
            |l| {
                l.weight.scale(alpha);
                l.bias.iter_mut().for_each(|v| *v *= alpha);
            },
        );
        self.output.iter_mut().for_each(|v| *v *= alpha);
    }

    fn for_each_part(&mut self, mut sparse: impl FnMut(&mut SparseRowGrad), mut dense: impl FnMut(&mut LayerGrad)) {
        if let Some(rl) = &mut self.rl {
            for t in [&mut rl.user, &mut rl.item] {
                sparse(&mut t.projection);
                t.layers.iter_mut().for_each(&mut dense);
            }
        }
        if let Some(ml) = &mut self.ml {
            sparse(&mut ml.user_embedding);
            sparse(&mut ml.item_embedding);
            ml.layers.iter_mut().for_each(&mut dense);
        }
    }

    /// Views in [`ModelParams::tensors`] order.
    pub fn views(&self) -> Vec<GradView<'_>> {
        let mut out = Vec::new();
        fn layers<'a>(ls: &'a [LayerGrad], out: &mut Vec<GradView<'a>>) {
            for l in ls {
                out.push(GradView::Dense(l.weight.as_slice()));
                out.push(GradView::Dense(&l.bias[..]));
            }
        }
        if let Some(rl) = &self.rl {
            for t in [&rl.user, &rl.item] {
                out.push(GradView::Rows(&t.projection));
                layers(&t.layers, &mut out);
            }
        }
        if let Some(ml) = &self.ml {
            out.push(GradView::Rows(&ml.user_embedding));
            out.push(GradView::Rows(&ml.item_embedding));
            layers(&ml.layers, &mut out);
        }
        out.push(GradView::Dense(&self.output[..]));
        out
    }

    /// Densified copy of every tensor gradient, in declared order.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        self.views()
            .into_iter()
            .map(|v| match v {
                GradView::Dense(d) => d.to_vec(),
                GradView::Rows(r) => r.to_dense().into_vec(),
            })
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.views().into_iter().all(|v| match v {
            GradView::Dense(d) => d.iter().all(|x| x.is_finite()),
            GradView::Rows(r) => r.is_finite(),
        })
    }
}
