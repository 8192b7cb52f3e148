use log::warn;
use rand::seq::index::sample as sample_indices;
use rand::Rng;

use crate::error::{Error, Result};

use super::{InteractionMatrix, SplitDataset};

/// Number of sampled negatives per held-out positive.
pub const TEST_NEGATIVES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainInstance {
    pub user: u32,
    pub item: u32,
    /// 1 for an observed pair, 0 for a sampled negative.
    pub label: u8,
}

/// Positives of the training matrix together with sampled negatives.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EpochBatchSet {
    pub instances: Vec<TrainInstance>,
    /// Users whose rows cover every item, so no negative could be drawn.
    pub saturated_users: usize,
}

impl EpochBatchSet {
    pub fn positives(&self) -> usize {
        self.instances.iter().filter(|x| x.label == 1).count()
    }

    pub fn negatives(&self) -> usize {
        self.instances.len() - self.positives()
    }
}

/// Uniform draws from the items a user has not interacted with.
struct ComplementSampler<'a> {
    row: &'a [u32],
    num_items: usize,
    /// Materialized complement when the row is dense enough that rejection
    /// sampling would spin.
    complement: Option<Vec<u32>>,
}

impl<'a> ComplementSampler<'a> {
    fn new(row: &'a [u32], num_items: usize) -> Self {
        let complement = (row.len() * 2 > num_items).then(|| {
            (0..num_items as u32)
                .filter(|i| row.binary_search(i).is_err())
                .collect()
        });
        Self {
            row,
            num_items,
            complement,
        }
    }

    fn available(&self) -> usize {
        self.num_items - self.row.len()
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        match &self.complement {
            Some(c) => c[rng.random_range(0..c.len())],
            None => loop {
                let j = rng.random_range(0..self.num_items as u32);
                if self.row.binary_search(&j).is_err() {
                    return j;
                }
            },
        }
    }
}

/// Every training positive plus `ratio` negatives per positive, each drawn
/// uniformly from the user's unobserved items. Repeats across positives are
/// allowed; observed items are never drawn.
pub fn sample_train_negatives<R: Rng + ?Sized>(
    train: &InteractionMatrix,
    ratio: usize,
    rng: &mut R,
) -> EpochBatchSet {
    let positives: Vec<(u32, u32)> = train.pairs().collect();
    sample_negatives_for(train, &positives, ratio, rng)
}

/// As [`sample_train_negatives`] but for a given list of positives.
pub fn sample_negatives_for<R: Rng + ?Sized>(
    train: &InteractionMatrix,
    positives: &[(u32, u32)],
    ratio: usize,
    rng: &mut R,
) -> EpochBatchSet {
    let mut instances = Vec::with_capacity(positives.len() * (ratio + 1));
    let mut saturated_users = 0;
    let mut k = 0;
    while k < positives.len() {
        let user = positives[k].0;
        let mut end = k;
        while end < positives.len() && positives[end].0 == user {
            end += 1;
        }
        let sampler = ComplementSampler::new(train.row(user as usize), train.num_items());
        let saturated = ratio > 0 && sampler.available() == 0;
        if saturated {
            saturated_users += 1;
        }
        for &(u, i) in &positives[k..end] {
            instances.push(TrainInstance { user: u, item: i, label: 1 });
            if saturated {
                continue;
            }
            for _ in 0..ratio {
                instances.push(TrainInstance {
                    user: u,
                    item: sampler.draw(rng),
                    label: 0,
                });
            }
        }
        k = end;
    }
    if saturated_users > 0 {
        warn!("{saturated_users} users interact with every item; no negatives drawn for them");
    }
    EpochBatchSet {
        instances,
        saturated_users,
    }
}

/// A held-out positive with its fixed sampled negatives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestCase {
    pub user: u32,
    pub positive: u32,
    pub negatives: Vec<u32>,
}

impl TestCase {
    /// Positive first, then the negatives in stored order.
    pub fn candidates(&self) -> Vec<u32> {
        let mut c = Vec::with_capacity(1 + self.negatives.len());
        c.push(self.positive);
        c.extend_from_slice(&self.negatives);
        c
    }
}

/// `count` distinct negatives per user, drawn uniformly from items outside
/// the user's training row and held-out positive.
pub fn sample_test_negatives<R: Rng + ?Sized>(
    split: &SplitDataset,
    count: usize,
    rng: &mut R,
) -> Result<Vec<TestCase>> {
    let num_items = split.num_items();
    let mut cases = Vec::with_capacity(split.test.len());
    for t in &split.test {
        let row = split.train.row(t.user as usize);
        let excluded = |j: u32| j == t.item || row.binary_search(&j).is_ok();
        let available = num_items - row.len() - 1;
        if available < count {
            return Err(Error::InsufficientCandidates {
                user: t.user as usize,
                available,
                needed: count,
            });
        }
        let negatives = if available < 2 * count {
            let pool: Vec<u32> = (0..num_items as u32).filter(|&j| !excluded(j)).collect();
            sample_indices(rng, pool.len(), count)
                .into_iter()
                .map(|k| pool[k])
                .collect()
        } else {
            let mut chosen: Vec<u32> = Vec::with_capacity(count);
            while chosen.len() < count {
                let j = rng.random_range(0..num_items as u32);
                if !excluded(j) && !chosen.contains(&j) {
                    chosen.push(j);
                }
            }
            chosen
        };
        cases.push(TestCase {
            user: t.user,
            positive: t.item,
            negatives,
        });
    }
    Ok(cases)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{build_split, Rating, RatingLog};
    use crate::rng::seeded;
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    use std::collections::HashSet;

    #[test]
    fn ratio_zero_yields_positives_only() {
        let m = InteractionMatrix::from_pairs(2, 5, [(0, 1), (0, 2), (1, 4)]).unwrap();
        let set = sample_train_negatives(&m, 0, &mut seeded(1));
        assert_eq!(set.instances.len(), 3);
        assert!(set.instances.iter().all(|x| x.label == 1));
    }

    #[test]
    fn forced_choice_when_one_item_is_unobserved() {
        let pairs: Vec<(u32, u32)> = (0..10).filter(|&i| i != 7).map(|i| (0, i)).collect();
        let m = InteractionMatrix::from_pairs(1, 10, pairs).unwrap();
        let set = sample_train_negatives(&m, 1, &mut seeded(2));
        assert_eq!(set.negatives(), 9);
        assert!(set.instances.iter().filter(|x| x.label == 0).all(|x| x.item == 7));
    }

    #[test]
    fn full_rows_are_skipped_and_counted() {
        let m = InteractionMatrix::from_pairs(2, 3, [(0, 0), (0, 1), (0, 2), (1, 0)]).unwrap();
        let set = sample_train_negatives(&m, 2, &mut seeded(3));
        assert_eq!(set.saturated_users, 1);
        assert_eq!(set.negatives(), 2);
        assert_eq!(set.positives(), 4);
    }

    #[test]
    fn labels_respect_training_matrix() {
        let mut rng = seeded(4);
        let pairs: Vec<(u32, u32)> = (0..30u32)
            .flat_map(|u| (0..40u32).filter(move |i| (u * 7 + i * 3) % 5 == 0).map(move |i| (u, i)))
            .collect();
        let m = InteractionMatrix::from_pairs(30, 40, pairs).unwrap();
        let set = sample_train_negatives(&m, 4, &mut rng);
        assert_eq!(set.negatives(), 4 * set.positives());
        for x in &set.instances {
            assert_eq!(m.contains(x.user as usize, x.item as usize), x.label == 1);
        }
    }

    #[test]
    fn negatives_are_uniform_over_unobserved_items() {
        // 1 user, 20 items, 10 observed: 10 admissible negatives. Test both
        // the rejection path (row below half) and the materialized path.
        for observed in [10usize, 5] {
            let pairs: Vec<(u32, u32)> = (0..observed as u32).map(|i| (0, 2 * i)).collect();
            let m = InteractionMatrix::from_pairs(1, 20, pairs).unwrap();
            let mut counts = [0usize; 20];
            let mut rng = seeded(99);
            let mut total = 0;
            while total < 100_000 {
                for x in sample_train_negatives(&m, 10, &mut rng).instances {
                    if x.label == 0 {
                        counts[x.item as usize] += 1;
                        total += 1;
                    }
                }
            }
            let cells: Vec<usize> = (0..20).filter(|&i| !m.contains(0, i)).collect();
            assert!(cells.iter().all(|&i| counts[i] > 0));
            assert!((0..20).filter(|i| m.contains(0, *i)).all(|i| counts[i] == 0));
            let expected = total as f64 / cells.len() as f64;
            let chi2: f64 = cells
                .iter()
                .map(|&i| (counts[i] as f64 - expected).powi(2) / expected)
                .sum();
            let critical = ChiSquared::new((cells.len() - 1) as f64).unwrap().inverse_cdf(0.99);
            assert!(chi2 < critical, "chi2 {chi2} >= {critical}");
            let sd = (expected * (1.0 - 1.0 / cells.len() as f64)).sqrt();
            for &i in &cells {
                assert!((counts[i] as f64 - expected).abs() < 4.0 * sd);
            }
        }
    }

    fn split_from(pairs: &[(usize, usize, u64)]) -> SplitDataset {
        let log = RatingLog::from_records(pairs.iter().map(|&(u, i, t)| Rating {
            user: u.to_string(),
            item: i.to_string(),
            rating: 1.0,
            timestamp: t,
        }));
        build_split(&log).unwrap().1
    }

    #[test]
    fn forced_test_negative_set() {
        // 102 items; every user rates two items, so each keeps one train item
        // plus one held-out positive and exactly 100 candidates remain.
        let pairs: Vec<(usize, usize, u64)> = (0..51)
            .flat_map(|u| [(u, 2 * u, 1), (u, 2 * u + 1, 2)])
            .collect();
        let split = split_from(&pairs);
        assert_eq!(split.num_items(), 102);
        let cases = sample_test_negatives(&split, 100, &mut seeded(5)).unwrap();
        let c0 = &cases[0];
        let mut negs = c0.negatives.clone();
        negs.sort_unstable();
        assert_eq!(negs, (2..102).collect::<Vec<u32>>());
    }

    #[test]
    fn insufficient_candidates_name_the_user() {
        let mut pairs: Vec<(usize, usize, u64)> = vec![(0, 0, 1), (0, 1, 2)];
        pairs.extend((0..20).map(|i| (1, i, i as u64)));
        let split = split_from(&pairs);
        // user 1: 19 train items + 1 positive out of 20.
        let err = sample_test_negatives(&split, 1, &mut seeded(5)).unwrap_err();
        assert!(matches!(err, Error::InsufficientCandidates { user: 1, available: 0, .. }));
    }

    #[test]
    fn test_negatives_membership_and_determinism() {
        let mut rng = seeded(6);
        let mut pairs = Vec::new();
        for u in 0..50usize {
            for i in 0..300usize {
                if rng.random::<f64>() < 0.2 {
                    pairs.push((u, i, rng.random_range(0..1000)));
                }
            }
        }
        let split = split_from(&pairs);
        let a = sample_test_negatives(&split, TEST_NEGATIVES, &mut seeded(7)).unwrap();
        let b = sample_test_negatives(&split, TEST_NEGATIVES, &mut seeded(7)).unwrap();
        assert_eq!(a, b);
        for c in &a {
            assert_eq!(c.negatives.len(), TEST_NEGATIVES);
            let uniq: HashSet<u32> = c.negatives.iter().copied().collect();
            assert_eq!(uniq.len(), TEST_NEGATIVES);
            for &j in &c.negatives {
                assert_ne!(j, c.positive);
                assert!(!split.train.contains(c.user as usize, j as usize));
            }
        }
    }
}
