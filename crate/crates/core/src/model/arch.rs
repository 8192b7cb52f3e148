use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Representation learning: MLP towers over the user row and item column,
    /// element-wise product, weighted sum.
    Rl,
    /// Matching function learning: linear embeddings of row and column,
    /// concatenation, MLP.
    Ml,
    /// Both predictive vectors concatenated under one output layer.
    Fused,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Rl => "rl",
            Variant::Ml => "ml",
            Variant::Fused => "fused",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rl" => Ok(Variant::Rl),
            "ml" => Ok(Variant::Ml),
            "fused" => Ok(Variant::Fused),
            other => Err(Error::InvalidArgument(format!("unknown variant {other:?}"))),
        }
    }
}

/// Widths of the representation-learning towers. The first entry is the
/// width of the bias-free sparse projection of the interaction vector; each
/// further entry is a ReLU layer. Both towers must end at the same width.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RlSpec {
    pub user_dims: Vec<usize>,
    pub item_dims: Vec<usize>,
}

/// Embedding width for users and items, and the widths of the ReLU layers
/// applied to their concatenation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlSpec {
    pub embedding_dim: usize,
    pub layer_dims: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArchSpec {
    pub num_users: usize,
    pub num_items: usize,
    pub rl: Option<RlSpec>,
    pub ml: Option<MlSpec>,
}

impl RlSpec {
    /// Towers `[4d, 2d, d]`.
    pub fn with_predictive_dim(d: usize) -> Self {
        Self {
            user_dims: vec![4 * d, 2 * d, d],
            item_dims: vec![4 * d, 2 * d, d],
        }
    }

    pub fn predictive_dim(&self) -> usize {
        *self.user_dims.last().unwrap_or(&0)
    }
}

impl MlSpec {
    /// Embeddings of width `2d`, layers `4d → 2d → d`.
    pub fn with_predictive_dim(d: usize) -> Self {
        Self {
            embedding_dim: 2 * d,
            layer_dims: vec![2 * d, d],
        }
    }

    pub fn predictive_dim(&self) -> usize {
        self.layer_dims.last().copied().unwrap_or(2 * self.embedding_dim)
    }
}

impl ArchSpec {
    pub fn new(variant: Variant, num_users: usize, num_items: usize, predictive_dim: usize) -> Self {
        let rl = matches!(variant, Variant::Rl | Variant::Fused)
            .then(|| RlSpec::with_predictive_dim(predictive_dim));
        let ml = matches!(variant, Variant::Ml | Variant::Fused)
            .then(|| MlSpec::with_predictive_dim(predictive_dim));
        Self {
            num_users,
            num_items,
            rl,
            ml,
        }
    }

    pub fn variant(&self) -> Variant {
        match (&self.rl, &self.ml) {
            (Some(_), Some(_)) => Variant::Fused,
            (Some(_), None) => Variant::Rl,
            _ => Variant::Ml,
        }
    }

    /// Length of the output weight: the width of the (joint) predictive vector.
    pub fn output_dim(&self) -> usize {
        self.rl.as_ref().map_or(0, RlSpec::predictive_dim)
            + self.ml.as_ref().map_or(0, MlSpec::predictive_dim)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::ArchMismatch(m));
        if self.num_users == 0 || self.num_items == 0 {
            return bad(format!("empty dataset dims {}x{}", self.num_users, self.num_items));
        }
        if self.rl.is_none() && self.ml.is_none() {
            return bad("architecture has neither component".into());
        }
        if let Some(rl) = &self.rl {
            if rl.user_dims.is_empty() || rl.item_dims.is_empty() {
                return bad("towers need at least the projection width".into());
            }
            if rl.user_dims.iter().chain(&rl.item_dims).any(|&d| d == 0) {
                return bad("tower widths must be >= 1".into());
            }
            if rl.user_dims.last() != rl.item_dims.last() {
                return bad(format!(
                    "user tower ends at {} but item tower at {}",
                    rl.predictive_dim(),
                    rl.item_dims.last().unwrap()
                ));
            }
        }
        if let Some(ml) = &self.ml {
            if ml.embedding_dim == 0 || ml.layer_dims.contains(&0) {
                return bad("embedding and layer widths must be >= 1".into());
            }
        }
        Ok(())
    }

    /// `key=value` lines; the exact inverse of [`ArchSpec::from_text`].
    pub fn to_text(&self) -> String {
        let list = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        let mut s = format!(
            "variant={}\nusers={}\nitems={}\n",
            self.variant(),
            self.num_users,
            self.num_items
        );
        if let Some(rl) = &self.rl {
            s += &format!("rl.user={}\nrl.item={}\n", list(&rl.user_dims), list(&rl.item_dims));
        }
        if let Some(ml) = &self.ml {
            s += &format!(
                "ml.embedding={}\nml.layers={}\n",
                ml.embedding_dim,
                list(&ml.layer_dims)
            );
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |m: String| Error::Checkpoint(format!("architecture header: {m}"));
        let mut num_users = None;
        let mut num_items = None;
        let (mut rl_user, mut rl_item, mut ml_emb, mut ml_layers) = (None, None, None, None);
        let num = |v: &str| v.parse::<usize>().map_err(|_| bad(format!("bad number {v:?}")));
        let list = |v: &str| -> Result<Vec<usize>> {
            if v.is_empty() {
                return Ok(Vec::new());
            }
            v.split(',').map(num).collect()
        };
        let mut variant = None;
        for line in text.lines().filter(|l| !l.is_empty()) {
            let (k, v) = line.split_once('=').ok_or_else(|| bad(format!("bad line {line:?}")))?;
            match k {
                "variant" => variant = Some(v.parse::<Variant>()?),
                "users" => num_users = Some(num(v)?),
                "items" => num_items = Some(num(v)?),
                "rl.user" => rl_user = Some(list(v)?),
                "rl.item" => rl_item = Some(list(v)?),
                "ml.embedding" => ml_emb = Some(num(v)?),
                "ml.layers" => ml_layers = Some(list(v)?),
                other => return Err(bad(format!("unknown key {other:?}"))),
            }
        }
        let rl = match (rl_user, rl_item) {
            (Some(user_dims), Some(item_dims)) => Some(RlSpec {
                user_dims,
                item_dims,
            }),
            (None, None) => None,
            _ => return Err(bad("incomplete rl section".into())),
        };
        let ml = match (ml_emb, ml_layers) {
            (Some(embedding_dim), Some(layer_dims)) => Some(MlSpec {
                embedding_dim,
                layer_dims,
            }),
            (None, None) => None,
            _ => return Err(bad("incomplete ml section".into())),
        };
        let arch = Self {
            num_users: num_users.ok_or_else(|| bad("missing users".into()))?,
            num_items: num_items.ok_or_else(|| bad("missing items".into()))?,
            rl,
            ml,
        };
        if variant != Some(arch.variant()) {
            return Err(bad("variant does not match sections".into()));
        }
        arch.validate()?;
        Ok(arch)
    }
}
