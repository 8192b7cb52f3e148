use std::cmp::Ordering;

/// Candidates ordered by descending score.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    pub user: u32,
    /// Item indices, best first. Truncated to `K` entries.
    pub items: Vec<u32>,
    /// 1-based rank of the positive in the full ordering.
    pub positive_rank: usize,
}

/// Orders `candidates` by descending score, ties broken by ascending item
/// index, and keeps the first `k`. `candidates[0]` is the positive.
///
/// # Panics
///
/// If `scores` and `candidates` differ in length or are empty.
pub fn rank_and_truncate(user: u32, candidates: &[u32], scores: &[f64], k: usize) -> RankedList {
    assert_eq!(candidates.len(), scores.len(), "one score per candidate");
    assert!(!candidates.is_empty(), "no candidates");
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| match scores[b].total_cmp(&scores[a]) {
        Ordering::Equal => candidates[a].cmp(&candidates[b]),
        o => o,
    });
    let positive_rank = order.iter().position(|&j| j == 0).expect("index 0 present") + 1;
    RankedList {
        user,
        items: order.iter().take(k).map(|&j| candidates[j]).collect(),
        positive_rank,
    }
}

/// 1 if the positive is within the top `k`, else 0.
pub fn hit_ratio_at_k(rank: Option<usize>, k: usize) -> f64 {
    match rank {
        Some(r) if r >= 1 && r <= k => 1.0,
        _ => 0.0,
    }
}

/// `ln 2 / ln(rank + 1)` within the top `k`, else 0.
pub fn ndcg_at_k(rank: Option<usize>, k: usize) -> f64 {
    match rank {
        Some(1) if k >= 1 => 1.0,
        Some(r) if r >= 1 && r <= k => std::f64::consts::LN_2 / ((r + 1) as f64).ln(),
        _ => 0.0,
    }
}
