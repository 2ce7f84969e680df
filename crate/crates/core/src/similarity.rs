//! Vector space similarity between users and the cluster-neighbor weight
//! lists consumed by the clustering regularizer.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::clustering::ClusterAssignment;
use crate::dataset::RatingDataset;
use crate::error::{Error, Result};

/// Cosine of two users' raw ratings over the items both rated. Zero when they
/// share no item.
pub fn vss(train: &RatingDataset, i: u32, f: u32) -> f64 {
    let a = train.user_ratings(i);
    if i == f {
        return if a.is_empty() { 0.0 } else { 1.0 };
    }
    let b = train.user_ratings(f);
    let (mut x, mut y) = (0, 0);
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    while x < a.len() && y < b.len() {
        match a[x].0.cmp(&b[y].0) {
            std::cmp::Ordering::Less => x += 1,
            std::cmp::Ordering::Greater => y += 1,
            std::cmp::Ordering::Equal => {
                let (ra, rb) = (a[x].1, b[y].1);
                dot += ra * rb;
                na += ra * ra;
                nb += rb * rb;
                x += 1;
                y += 1;
            }
        }
    }
    cosine(dot, na, nb)
}

fn cosine(dot: f64, na: f64, nb: f64) -> f64 {
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na.sqrt() * nb.sqrt())).clamp(0.0, 1.0)
}

/// For every user, the same-cluster users (excluding itself) with their
/// similarity weights, stored as sorted adjacency runs.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborWeights {
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
    weights: Vec<f64>,
    sums: Vec<f64>,
}

impl NeighborWeights {
    /// No neighbors for any user.
    pub fn empty(n_users: usize) -> Self {
        NeighborWeights {
            offsets: vec![0; n_users + 1],
            neighbors: Vec::new(),
            weights: Vec::new(),
            sums: vec![0.0; n_users],
        }
    }

    /// Builds symmetric lists from unordered pairs `(i, f, w)`; each pair is
    /// stored in both directions.
    pub fn from_pairs(n_users: usize, pairs: &[(u32, u32, f64)]) -> Result<Self> {
        let mut lists: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n_users];
        for &(i, f, w) in pairs {
            if i as usize >= n_users || f as usize >= n_users {
                return Err(Error::InvalidInput(format!("pair ({i}, {f}) out of range")));
            }
            if i == f {
                return Err(Error::InvalidInput(format!("user {i} cannot neighbor itself")));
            }
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::InvalidInput(format!("weight {w} outside [0, 1]")));
            }
            lists[i as usize].push((f, w));
            lists[f as usize].push((i, w));
        }
        for list in &mut lists {
            list.sort_by_key(|e| e.0);
            if list.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::InvalidInput("duplicate neighbor pair".into()));
            }
        }
        Ok(Self::from_lists(lists))
    }

    fn from_lists(lists: Vec<Vec<(u32, f64)>>) -> Self {
        let mut offsets = Vec::with_capacity(lists.len() + 1);
        offsets.push(0);
        let total: usize = lists.iter().map(Vec::len).sum();
        let mut neighbors = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        let mut sums = Vec::with_capacity(lists.len());
        for list in lists {
            sums.push(list.iter().map(|e| e.1).sum());
            for (f, w) in list {
                neighbors.push(f);
                weights.push(w);
            }
            offsets.push(neighbors.len());
        }
        NeighborWeights {
            offsets,
            neighbors,
            weights,
            sums,
        }
    }

    pub fn n_users(&self) -> usize {
        self.sums.len()
    }

    /// Neighbor indices of `user`, ascending.
    pub fn neighbors(&self, user: usize) -> &[u32] {
        &self.neighbors[self.offsets[user]..self.offsets[user + 1]]
    }

    /// Weights aligned with [`Self::neighbors`].
    pub fn weights(&self, user: usize) -> &[f64] {
        &self.weights[self.offsets[user]..self.offsets[user + 1]]
    }

    pub fn iter(&self, user: usize) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.neighbors(user)
            .iter()
            .copied()
            .zip(self.weights(user).iter().copied())
    }

    /// Sum of the weights of `user`'s neighbors.
    pub fn weight_sum(&self, user: usize) -> f64 {
        self.sums[user]
    }

    /// Total number of directed entries, `sum_i |G(i)|`.
    pub fn total_entries(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }
}

/// Similarities from `user` to every later member of its cluster, computed
/// against a dense scatter of `user`'s ratings.
fn upper_row(train: &RatingDataset, members: &[u32], pos: usize, dense: &mut [f64]) -> Vec<(u32, f64)> {
    let i = members[pos];
    let own = train.user_ratings(i);
    for &(j, r) in own {
        dense[j as usize] = r;
    }
    let mut row = Vec::with_capacity(members.len() - pos - 1);
    for &f in &members[pos + 1..] {
        let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
        if !own.is_empty() {
            for &(j, rf) in train.user_ratings(f) {
                let ri = dense[j as usize];
                if !ri.is_nan() {
                    dot += ri * rf;
                    na += ri * ri;
                    nb += rf * rf;
                }
            }
        }
        row.push((f, cosine(dot, na, nb)));
    }
    for &(j, _) in own {
        dense[j as usize] = f64::NAN;
    }
    row
}

/// Similarity-weighted neighbor lists for every cluster, computed on the
/// training ratings. Each unordered pair is evaluated once.
pub fn build_neighbor_weights(assignment: &ClusterAssignment, train: &RatingDataset) -> Result<NeighborWeights> {
    let n_users = train.n_users();
    if assignment.labels().len() != n_users {
        return Err(Error::InvalidInput(format!(
            "assignment labels {} users, ratings have {n_users}",
            assignment.labels().len()
        )));
    }
    let n_items = train.n_items();
    let mut lists: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n_users];
    for members in assignment.members() {
        let positions: Vec<usize> = (0..members.len()).collect();
        #[cfg(feature = "parallel")]
        let rows: Vec<Vec<(u32, f64)>> = positions
            .par_iter()
            .map_init(
                || vec![f64::NAN; n_items],
                |dense, &pos| upper_row(train, &members, pos, dense),
            )
            .collect();
        #[cfg(not(feature = "parallel"))]
        let rows: Vec<Vec<(u32, f64)>> = {
            let mut dense = vec![f64::NAN; n_items];
            positions
                .iter()
                .map(|&pos| upper_row(train, &members, pos, &mut dense))
                .collect()
        };
        for (pos, row) in rows.into_iter().enumerate() {
            let i = members[pos];
            for (f, w) in row {
                lists[i as usize].push((f, w));
                lists[f as usize].push((i, w));
            }
        }
    }
    for list in &mut lists {
        list.sort_by_key(|e| e.0);
    }
    Ok(NeighborWeights::from_lists(lists))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Rating;

    fn r(user: u32, item: u32, value: f64) -> Rating {
        Rating { user, item, value }
    }

    fn hand_example() -> RatingDataset {
        // users 0 and 1 co-rate items 0 and 1; user 2 rates only item 2; user 3 nothing
        RatingDataset::from_dense(
            4,
            3,
            vec![r(0, 0, 4.0), r(0, 1, 2.0), r(1, 0, 2.0), r(1, 1, 4.0), r(2, 2, 5.0)],
        )
        .unwrap()
    }

    #[test]
    fn hand_computed_cosine() {
        let ds = hand_example();
        assert!((vss(&ds, 0, 1) - 0.8).abs() < 1e-15);
        assert_eq!(vss(&ds, 0, 1), vss(&ds, 1, 0));
    }

    #[test]
    fn self_and_disjoint() {
        let ds = hand_example();
        assert_eq!(vss(&ds, 0, 0), 1.0);
        assert_eq!(vss(&ds, 3, 3), 0.0);
        assert_eq!(vss(&ds, 0, 2), 0.0);
        assert_eq!(vss(&ds, 0, 3), 0.0);
    }

    #[test]
    fn neighbor_lists_follow_clusters() {
        let ds = hand_example();
        let data = [0.0, 0.0, 1.0, 1.0];
        let assignment = ClusterAssignment::from_labels(&data, 1, vec![0, 0, 1, 1], 2).unwrap();
        let w = build_neighbor_weights(&assignment, &ds).unwrap();
        assert_eq!(w.neighbors(0), &[1]);
        assert!((w.weights(0)[0] - 0.8).abs() < 1e-15);
        assert_eq!(w.neighbors(1), &[0]);
        assert_eq!(w.weights(1), w.weights(0));
        assert_eq!(w.neighbors(2), &[3]);
        assert_eq!(w.weights(2), &[0.0]);
        assert_eq!(w.total_entries(), 4);
    }

    #[test]
    fn lone_user_has_no_neighbors() {
        let ds = hand_example();
        let data = [0.0, 1.0, 1.0, 1.0];
        let assignment = ClusterAssignment::from_labels(&data, 1, vec![0, 1, 1, 1], 2).unwrap();
        let w = build_neighbor_weights(&assignment, &ds).unwrap();
        assert!(w.neighbors(0).is_empty());
        assert_eq!(w.weight_sum(0), 0.0);
        assert_eq!(w.neighbors(2).len(), 2);
    }

    #[test]
    fn from_pairs_validates() {
        assert!(NeighborWeights::from_pairs(2, &[(0, 0, 1.0)]).is_err());
        assert!(NeighborWeights::from_pairs(2, &[(0, 2, 1.0)]).is_err());
        assert!(NeighborWeights::from_pairs(2, &[(0, 1, 1.5)]).is_err());
        assert!(NeighborWeights::from_pairs(2, &[(0, 1, 1.0), (1, 0, 1.0)]).is_err());
        let w = NeighborWeights::from_pairs(3, &[(2, 0, 0.5)]).unwrap();
        assert_eq!(w.neighbors(0), &[2]);
        assert_eq!(w.weight_sum(2), 0.5);
    }
}
