use std::fmt::Write as _;

use crate::data::{InteractionMatrix, TestCase};
use crate::error::{Error, Result};

use super::{hit_ratio_at_k, ndcg_at_k, rank_and_truncate, Scorer};

pub const DEFAULT_K: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserResult {
    pub user: u32,
    pub rank: usize,
    pub hr: f64,
    pub ndcg: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub k: usize,
    pub hr: f64,
    pub ndcg: f64,
    /// Sorted by user.
    pub users: Vec<UserResult>,
    pub model: String,
    pub dataset: String,
    pub seed: u64,
}

impl EvalReport {
    pub fn with_meta(mut self, model: &str, dataset: &str, seed: u64) -> Self {
        self.model = model.to_string();
        self.dataset = dataset.to_string();
        self.seed = seed;
        self
    }

    /// Header, one `user \t rank \t hr \t ndcg` line per user, then the means.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# model\t{}", self.model);
        let _ = writeln!(s, "# dataset\t{}", self.dataset);
        let _ = writeln!(s, "# seed\t{}", self.seed);
        let _ = writeln!(s, "# k\t{}", self.k);
        s.push_str("user\trank\thr\tndcg\n");
        for u in &self.users {
            let _ = writeln!(s, "{}\t{}\t{}\t{:.6}", u.user, u.rank, u.hr, u.ndcg);
        }
        let _ = writeln!(s, "# users\t{}", self.users.len());
        let _ = writeln!(s, "# hr@{}\t{:.6}", self.k, self.hr);
        let _ = writeln!(s, "# ndcg@{}\t{:.6}", self.k, self.ndcg);
        s
    }
}

/// Ranks every test case's candidates with `scorer` and averages HR@K and
/// NDCG@K. Means are summed in user order, so the result does not depend on
/// the order of `cases`.
pub fn evaluate<S: Scorer + ?Sized>(
    scorer: &S,
    train: &InteractionMatrix,
    cases: &[TestCase],
    k: usize,
) -> Result<EvalReport> {
    if cases.is_empty() {
        return Err(Error::InvalidArgument("no test cases to evaluate".into()));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("K must be >= 1".into()));
    }
    let mut users = Vec::with_capacity(cases.len());
    for case in cases {
        let scores = scorer.score_candidates(train, case)?;
        let candidates = case.candidates();
        if scores.len() != candidates.len() {
            return Err(Error::DimensionMismatch {
                context: "scores per candidate list",
                expected: candidates.len(),
                actual: scores.len(),
            });
        }
        let ranked = rank_and_truncate(case.user, &candidates, &scores, k);
        let rank = Some(ranked.positive_rank);
        users.push(UserResult {
            user: case.user,
            rank: ranked.positive_rank,
            hr: hit_ratio_at_k(rank, k),
            ndcg: ndcg_at_k(rank, k),
        });
    }
    users.sort_by_key(|u| u.user);
    let n = users.len() as f64;
    let hr = users.iter().map(|u| u.hr).sum::<f64>() / n;
    let ndcg = users.iter().map(|u| u.ndcg).sum::<f64>() / n;
    Ok(EvalReport {
        k,
        hr,
        ndcg,
        users,
        model: scorer.name(),
        dataset: String::new(),
        seed: 0,
    })
}
