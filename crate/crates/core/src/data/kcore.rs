use std::collections::HashMap;

use crate::error::{Error, Result};

use super::RatingLog;

/// Repeatedly drops users with fewer than `min_user` ratings and items with
/// fewer than `min_item` ratings until both constraints hold at once.
pub fn filter_k_core(log: &RatingLog, min_user: usize, min_item: usize) -> Result<RatingLog> {
    if min_user == 0 || min_item == 0 {
        return Err(Error::InvalidArgument("k-core thresholds must be >= 1".into()));
    }
    let mut alive = vec![true; log.records.len()];
    loop {
        let mut users: HashMap<&str, usize> = HashMap::new();
        let mut items: HashMap<&str, usize> = HashMap::new();
        for (r, _) in log.records.iter().zip(&alive).filter(|(_, &a)| a) {
            *users.entry(&r.user).or_default() += 1;
            *items.entry(&r.item).or_default() += 1;
        }
        let mut changed = false;
        for (r, a) in log.records.iter().zip(alive.iter_mut()) {
            if *a && (users[r.user.as_str()] < min_user || items[r.item.as_str()] < min_item) {
                *a = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let records: Vec<_> = log
        .records
        .iter()
        .zip(&alive)
        .filter(|(_, &a)| a)
        .map(|(r, _)| r.clone())
        .collect();
    if records.is_empty() {
        return Err(Error::EmptyAfterFilter { min_user, min_item });
    }
    Ok(RatingLog { records })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Rating;
    use crate::rng::seeded;
    use rand::Rng;
    use std::collections::BTreeSet;

    fn rec(u: usize, i: usize) -> Rating {
        Rating {
            user: format!("u{u}"),
            item: format!("i{i}"),
            rating: 1.0,
            timestamp: (u * 1000 + i) as u64,
        }
    }

    /// Removes one offending user or item per pass; stops when a pass
    /// changes nothing.
    fn naive_core(pairs: &BTreeSet<(usize, usize)>, mu: usize, mi: usize) -> BTreeSet<(usize, usize)> {
        let mut cur = pairs.clone();
        loop {
            let bad_user = cur
                .iter()
                .map(|p| p.0)
                .find(|&u| cur.iter().filter(|p| p.0 == u).count() < mu);
            if let Some(u) = bad_user {
                cur.retain(|p| p.0 != u);
                continue;
            }
            let bad_item = cur
                .iter()
                .map(|p| p.1)
                .find(|&i| cur.iter().filter(|p| p.1 == i).count() < mi);
            if let Some(i) = bad_item {
                cur.retain(|p| p.1 != i);
                continue;
            }
            return cur;
        }
    }

    #[test]
    fn satisfied_log_is_unchanged() {
        let log = RatingLog::from_records((0..3).flat_map(|u| (0..3).map(move |i| rec(u, i))));
        assert_eq!(filter_k_core(&log, 3, 3).unwrap(), log);
    }

    #[test]
    fn too_sparse_log_is_an_error() {
        let log = RatingLog::from_records((0..3).map(|i| rec(0, i)));
        assert!(matches!(filter_k_core(&log, 20, 1), Err(Error::EmptyAfterFilter { .. })));
        assert!(filter_k_core(&log, 0, 1).is_err());
    }

    #[test]
    fn matches_repeat_until_stable_oracle() {
        for seed in 0..40 {
            let mut rng = seeded(seed);
            let mut pairs = BTreeSet::new();
            let users = rng.random_range(5..25);
            let items = rng.random_range(5..25);
            let density: f64 = rng.random_range(0.1..0.6);
            for u in 0..users {
                for i in 0..items {
                    if rng.random::<f64>() < density {
                        pairs.insert((u, i));
                    }
                }
            }
            let (mu, mi) = (rng.random_range(1..6), rng.random_range(1..6));
            let log = RatingLog::from_records(pairs.iter().map(|&(u, i)| rec(u, i)));
            let expected = naive_core(&pairs, mu, mi);
            match filter_k_core(&log, mu, mi) {
                Ok(out) => {
                    let got: BTreeSet<(usize, usize)> = out
                        .records
                        .iter()
                        .map(|r| (r.user[1..].parse().unwrap(), r.item[1..].parse().unwrap()))
                        .collect();
                    assert_eq!(got, expected, "seed {seed}");
                }
                Err(_) => assert!(expected.is_empty(), "seed {seed}"),
            }
        }
    }
}
