//! Synthetic fixtures shared by the benchmarks.

use deepcf::data::{InteractionMatrix, TestCase, TrainInstance};
use deepcf::rng::seeded;
use rand::seq::index::sample;
use rand::Rng;

/// Random implicit-feedback matrix with about `per_user` items per user.
pub fn synthetic_matrix(users: usize, items: usize, per_user: usize, seed: u64) -> InteractionMatrix {
    let mut rng = seeded(seed);
    let mut pairs = Vec::with_capacity(users * per_user);
    for u in 0..users {
        let n = rng.random_range(1..=2 * per_user).min(items);
        pairs.extend(sample(&mut rng, items, n).into_iter().map(|i| (u as u32, i as u32)));
    }
    InteractionMatrix::from_pairs(users, items, pairs).expect("valid synthetic pairs")
}

/// `count` random (user, item, label) triples.
pub fn synthetic_instances(train: &InteractionMatrix, count: usize, seed: u64) -> Vec<TrainInstance> {
    let mut rng = seeded(seed);
    (0..count)
        .map(|_| TrainInstance {
            user: rng.random_range(0..train.num_users() as u32),
            item: rng.random_range(0..train.num_items() as u32),
            label: rng.random_range(0..2u8),
        })
        .collect()
}

/// One test case per user with `negatives` items the user has not seen.
pub fn synthetic_tests(train: &InteractionMatrix, negatives: usize, seed: u64) -> Vec<TestCase> {
    let mut rng = seeded(seed);
    (0..train.num_users() as u32)
        .map(|u| {
            let mut free = Vec::with_capacity(negatives + 1);
            while free.len() < negatives + 1 {
                let j = rng.random_range(0..train.num_items() as u32);
                if !train.contains(u as usize, j as usize) && !free.contains(&j) {
                    free.push(j);
                }
            }
            TestCase {
                user: u,
                positive: free[0],
                negatives: free[1..].to_vec(),
            }
        })
        .collect()
}
