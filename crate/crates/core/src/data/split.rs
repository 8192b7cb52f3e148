use std::collections::HashMap;

use log::warn;

use crate::error::{Error, Result};

use super::{InteractionMatrix, RatingLog};

/// Bijections between external tokens and dense indices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IdMaps {
    pub users: Vec<String>,
    pub items: Vec<String>,
    user_index: HashMap<String, u32>,
    item_index: HashMap<String, u32>,
}

impl IdMaps {
    fn intern(tokens: &mut Vec<String>, index: &mut HashMap<String, u32>, token: &str) -> u32 {
        if let Some(&k) = index.get(token) {
            return k;
        }
        let k = tokens.len() as u32;
        tokens.push(token.to_string());
        index.insert(token.to_string(), k);
        k
    }

    pub fn user_index(&self, token: &str) -> Option<u32> {
        self.user_index.get(token).copied()
    }

    pub fn item_index(&self, token: &str) -> Option<u32> {
        self.item_index.get(token).copied()
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_items(&self) -> usize {
        self.items.len()
    }
}

/// A user's held-out latest interaction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TestPositive {
    pub user: u32,
    pub item: u32,
    pub timestamp: u64,
}

/// Leave-one-out split: the training matrix plus one held-out positive per
/// user. `train_timestamps[u]` is aligned with `train.row(u)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitDataset {
    pub train: InteractionMatrix,
    pub train_timestamps: Vec<Vec<u64>>,
    pub test: Vec<TestPositive>,
    /// Users removed because they had a single interaction.
    pub dropped_users: usize,
}

impl SplitDataset {
    pub fn num_users(&self) -> usize {
        self.train.num_users()
    }

    pub fn num_items(&self) -> usize {
        self.train.num_items()
    }

    /// Train pairs plus held-out pairs.
    pub fn total_interactions(&self) -> usize {
        self.train.nnz() + self.test.len()
    }

    pub(crate) fn from_parts(
        train: InteractionMatrix,
        train_timestamps: Vec<Vec<u64>>,
        test: Vec<TestPositive>,
        dropped_users: usize,
    ) -> Result<Self> {
        if test.len() != train.num_users()
            || train_timestamps.len() != train.num_users()
            || test.iter().enumerate().any(|(u, t)| t.user as usize != u)
        {
            return Err(Error::InvalidArgument(
                "every user needs exactly one held-out positive, in user order".into(),
            ));
        }
        for t in &test {
            if t.item as usize >= train.num_items() || train.contains(t.user as usize, t.item as usize) {
                return Err(Error::InvalidArgument(format!(
                    "held-out item {} of user {} is invalid or also in train",
                    t.item, t.user
                )));
            }
        }
        Ok(Self {
            train,
            train_timestamps,
            test,
            dropped_users,
        })
    }
}

/// Leave-one-out split of a rating log.
///
/// Dense ids follow first appearance in the log among users that can be
/// split. Each user's record with the largest timestamp is held out; equal
/// timestamps go to the larger dense item index. Users with a single
/// interaction are dropped and counted.
pub fn build_split(log: &RatingLog) -> Result<(IdMaps, SplitDataset)> {
    let mut per_user: HashMap<&str, usize> = HashMap::new();
    for r in &log.records {
        *per_user.entry(r.user.as_str()).or_default() += 1;
    }
    let dropped: Vec<&str> = {
        let mut d: Vec<&str> = per_user.iter().filter(|(_, &c)| c < 2).map(|(&u, _)| u).collect();
        d.sort_unstable();
        d
    };
    if !dropped.is_empty() {
        warn!("dropping {} users with a single interaction", dropped.len());
    }

    let mut ids = IdMaps::default();
    let mut grouped: Vec<Vec<(u32, u64)>> = Vec::new();
    for r in log.records.iter().filter(|r| per_user[r.user.as_str()] >= 2) {
        let u = IdMaps::intern(&mut ids.users, &mut ids.user_index, &r.user) as usize;
        let i = IdMaps::intern(&mut ids.items, &mut ids.item_index, &r.item);
        if u == grouped.len() {
            grouped.push(Vec::new());
        }
        grouped[u].push((i, r.timestamp));
    }
    if grouped.is_empty() {
        return Err(Error::InvalidArgument(
            "no user has the two interactions a leave-one-out split needs".into(),
        ));
    }

    let mut rows = Vec::with_capacity(grouped.len());
    let mut timestamps = Vec::with_capacity(grouped.len());
    let mut test = Vec::with_capacity(grouped.len());
    for (u, mut entries) in grouped.into_iter().enumerate() {
        entries.sort_unstable();
        let held = entries
            .iter()
            .enumerate()
            .max_by_key(|(_, &(item, ts))| (ts, item))
            .map(|(k, _)| k)
            .expect("at least two entries");
        let (item, timestamp) = entries.remove(held);
        test.push(TestPositive {
            user: u as u32,
            item,
            timestamp,
        });
        rows.push(entries.iter().map(|e| e.0).collect::<Vec<_>>());
        timestamps.push(entries.iter().map(|e| e.1).collect());
    }
    let train = InteractionMatrix::from_pairs(
        rows.len(),
        ids.num_items(),
        rows.iter()
            .enumerate()
            .flat_map(|(u, r)| r.iter().map(move |&i| (u as u32, i))),
    )?;
    let split = SplitDataset::from_parts(train, timestamps, test, dropped.len())?;
    Ok((ids, split))
}
