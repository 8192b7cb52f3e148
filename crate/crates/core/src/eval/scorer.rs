use crate::data::{InteractionMatrix, TestCase};
use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Anything that can score a test case's candidate list.
pub trait Scorer {
    /// One score per entry of `case.candidates()`; higher ranks first.
    fn score_candidates(&self, train: &InteractionMatrix, case: &TestCase) -> Result<Vec<f64>>;

    fn name(&self) -> String;
}

/// Scores are logits, which order candidates exactly as `ŷ` does without
/// the ties a saturated sigmoid would introduce.
impl Scorer for ModelParams {
    fn score_candidates(&self, train: &InteractionMatrix, case: &TestCase) -> Result<Vec<f64>> {
        if (train.num_users(), train.num_items()) != (self.arch.num_users, self.arch.num_items) {
            return Err(Error::ArchMismatch(format!(
                "model built for {}x{}, data is {}x{}",
                self.arch.num_users,
                self.arch.num_items,
                train.num_users(),
                train.num_items()
            )));
        }
        let candidates = case.candidates();
        if let Some(&bad) = candidates.iter().find(|&&j| j as usize >= train.num_items()) {
            return Err(Error::IndexOutOfRange {
                index: bad as usize,
                bound: train.num_items(),
            });
        }
        let row = train.row(case.user as usize);
        let users = vec![row; candidates.len()];
        let items: Vec<&[u32]> = candidates.iter().map(|&j| train.col(j as usize)).collect();
        Ok(self.forward(&users, &items)?.logits().to_vec())
    }

    fn name(&self) -> String {
        self.arch.variant().to_string()
    }
}

/// Training interaction count of every item.
pub fn item_pop_scores(train: &InteractionMatrix) -> Vec<usize> {
    (0..train.num_items()).map(|i| train.col(i).len()).collect()
}

/// Non-personalized popularity baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct ItemPop {
    counts: Vec<usize>,
}

impl ItemPop {
    pub fn fit(train: &InteractionMatrix) -> Self {
        Self {
            counts: item_pop_scores(train),
        }
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }
}

impl Scorer for ItemPop {
    fn score_candidates(&self, _train: &InteractionMatrix, case: &TestCase) -> Result<Vec<f64>> {
        case.candidates()
            .into_iter()
            .map(|j| {
                self.counts
                    .get(j as usize)
                    .map(|&c| c as f64)
                    .ok_or(Error::IndexOutOfRange {
                        index: j as usize,
                        bound: self.counts.len(),
                    })
            })
            .collect()
    }

    fn name(&self) -> String {
        "itempop".into()
    }
}

impl<F> Scorer for F
where
    F: Fn(&TestCase) -> Vec<f64>,
{
    fn score_candidates(&self, _train: &InteractionMatrix, case: &TestCase) -> Result<Vec<f64>> {
        Ok(self(case))
    }

    fn name(&self) -> String {
        "closure".into()
    }
}
