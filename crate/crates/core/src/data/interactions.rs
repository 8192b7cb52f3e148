use crate::error::{Error, Result};

/// Binary user × item matrix kept as per-user item lists (CSR-like) and
/// per-item user lists (CSC-like). Both views hold the same pairs and every
/// list is strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionMatrix {
    num_users: usize,
    num_items: usize,
    rows: Vec<Vec<u32>>,
    cols: Vec<Vec<u32>>,
    nnz: usize,
}

impl InteractionMatrix {
    /// Builds both views from `(user, item)` pairs; repeated pairs collapse.
    pub fn from_pairs(
        num_users: usize,
        num_items: usize,
        pairs: impl IntoIterator<Item = (u32, u32)>,
    ) -> Result<Self> {
        let mut rows: Vec<Vec<u32>> = vec![Vec::new(); num_users];
        for (u, i) in pairs {
            if u as usize >= num_users {
                return Err(Error::IndexOutOfRange { index: u as usize, bound: num_users });
            }
            if i as usize >= num_items {
                return Err(Error::IndexOutOfRange { index: i as usize, bound: num_items });
            }
            rows[u as usize].push(i);
        }
        for r in rows.iter_mut() {
            r.sort_unstable();
            r.dedup();
        }
        Ok(Self::from_rows(num_items, rows))
    }

    fn from_rows(num_items: usize, rows: Vec<Vec<u32>>) -> Self {
        let mut cols: Vec<Vec<u32>> = vec![Vec::new(); num_items];
        let mut nnz = 0;
        for (u, r) in rows.iter().enumerate() {
            nnz += r.len();
            for &i in r {
                cols[i as usize].push(u as u32);
            }
        }
        Self {
            num_users: rows.len(),
            num_items,
            rows,
            cols,
            nnz,
        }
    }

    #[inline]
    pub fn num_users(&self) -> usize {
        self.num_users
    }

    #[inline]
    pub fn num_items(&self) -> usize {
        self.num_items
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.nnz
    }

    /// Items of `user`, i.e. the support of row `y_u*`.
    #[inline]
    pub fn row(&self, user: usize) -> &[u32] {
        &self.rows[user]
    }

    /// Users of `item`, i.e. the support of column `y_*i`.
    #[inline]
    pub fn col(&self, item: usize) -> &[u32] {
        &self.cols[item]
    }

    pub fn contains(&self, user: usize, item: usize) -> bool {
        self.rows[user].binary_search(&(item as u32)).is_ok()
    }

    /// `1 − nnz / (M·N)`.
    pub fn sparsity(&self) -> f64 {
        1.0 - self.nnz as f64 / (self.num_users as f64 * self.num_items as f64)
    }

    /// All pairs in `(user, item)` order.
    pub fn pairs(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(u, r)| r.iter().map(move |&i| (u as u32, i)))
    }

    /// Full cross-check of the row and column views.
    pub fn check_duality(&self) -> bool {
        let sorted = |v: &Vec<u32>| v.windows(2).all(|w| w[0] < w[1]);
        if !self.rows.iter().all(sorted) || !self.cols.iter().all(sorted) {
            return false;
        }
        let col_total: usize = self.cols.iter().map(Vec::len).sum();
        col_total == self.nnz
            && self.pairs().all(|(u, i)| self.cols[i as usize].binary_search(&u).is_ok())
    }
}
