use crate::dataset::{RatingDataset, TagCatalog};
use crate::error::{Error, Result};

/// Per-user tag counts over the training ratings, plus their L1-normalized
/// rows.
#[derive(Debug, Clone, PartialEq)]
pub struct InterestMatrix {
    n_users: usize,
    n_tags: usize,
    raw: Vec<u32>,
    normalized: Vec<f64>,
    empty_rows: usize,
}

impl InterestMatrix {
    /// `raw[i][h]` counts the training items rated by user `i` that carry tag `h`.
    pub fn build(train: &RatingDataset, tags: &TagCatalog) -> Result<Self> {
        if tags.n_items() < train.n_items() {
            return Err(Error::InvalidInput(format!(
                "tag catalog covers {} items, ratings use {}",
                tags.n_items(),
                train.n_items()
            )));
        }
        let (n_users, n_tags) = (train.n_users(), tags.n_tags());
        let mut raw = vec![0u32; n_users * n_tags];
        for r in train.ratings() {
            let row = &mut raw[r.user as usize * n_tags..][..n_tags];
            for &h in tags.item_tags(r.item) {
                row[h as usize] += 1;
            }
        }
        Ok(Self::from_counts(n_users, n_tags, raw))
    }

    fn from_counts(n_users: usize, n_tags: usize, raw: Vec<u32>) -> Self {
        let mut normalized = vec![0.0; raw.len()];
        let mut empty_rows = 0;
        if n_tags == 0 {
            empty_rows = n_users;
        }
        for (counts, out) in raw.chunks(n_tags.max(1)).zip(normalized.chunks_mut(n_tags.max(1))) {
            let total: u64 = counts.iter().map(|&c| c as u64).sum();
            if total == 0 {
                empty_rows += 1;
                continue;
            }
            for (o, &c) in out.iter_mut().zip(counts) {
                *o = c as f64 / total as f64;
            }
        }
        InterestMatrix {
            n_users,
            n_tags,
            raw,
            normalized,
            empty_rows,
        }
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_tags(&self) -> usize {
        self.n_tags
    }

    pub fn raw_row(&self, user: usize) -> &[u32] {
        &self.raw[user * self.n_tags..][..self.n_tags]
    }

    pub fn normalized_row(&self, user: usize) -> &[f64] {
        &self.normalized[user * self.n_tags..][..self.n_tags]
    }

    /// Row-major normalized matrix, `n_users * n_tags` values.
    pub fn normalized(&self) -> &[f64] {
        &self.normalized
    }

    /// Users whose rated items carry no tags at all.
    pub fn empty_rows(&self) -> usize {
        self.empty_rows
    }
}
