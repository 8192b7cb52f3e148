//! Leave-one-out ranking evaluation over sampled candidate lists.

mod metrics;
mod report;
mod scorer;

pub use metrics::{hit_ratio_at_k, ndcg_at_k, rank_and_truncate, RankedList};
pub use report::{evaluate, EvalReport, UserResult, DEFAULT_K};
pub use scorer::{item_pop_scores, ItemPop, Scorer};
