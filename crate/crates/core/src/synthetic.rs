//! Synthetic MovieLens-shaped data with planted taste groups.
//!
//! Users belong to groups; each group favours the items of its own genres and
//! shares a latent taste center. That makes tag-interest clustering meaningful
//! and lets the cluster regularizer help, which the real data is expected to
//! show as well.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dataset::{RatingDataset, TagCatalog};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub users: usize,
    pub items: usize,
    pub tags: usize,
    pub groups: usize,
    /// Dimension of the planted tastes.
    pub factors: usize,
    /// Mean number of ratings per user.
    pub ratings_per_user: usize,
    /// Probability that a rated item comes from the user's own group.
    pub affinity: f64,
    /// Standard deviation of rating noise, in stars.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            users: 300,
            items: 240,
            tags: 12,
            groups: 4,
            factors: 4,
            ratings_per_user: 30,
            affinity: 0.8,
            noise: 0.6,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub ratings: RatingDataset,
    pub tags: TagCatalog,
    /// Planted group of every user, by dense user index.
    pub groups: Vec<usize>,
    /// Genre list of every item by external id (1-based, index `id - 1`).
    pub item_genres: Vec<Vec<u32>>,
}

fn normal_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

pub fn generate(config: &SyntheticConfig) -> Result<SyntheticData> {
    let c = config;
    if c.users == 0 || c.items == 0 || c.groups == 0 || c.factors == 0 {
        return Err(Error::InvalidConfig("synthetic sizes must be positive".into()));
    }
    if c.tags < c.groups {
        return Err(Error::InvalidConfig("need at least one tag per group".into()));
    }
    if c.ratings_per_user == 0 || c.ratings_per_user > c.items {
        return Err(Error::InvalidConfig("ratings_per_user must lie in 1..=items".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let l = c.factors;

    let centers: Vec<Vec<f64>> = (0..c.groups).map(|_| normal_vec(&mut rng, l)).collect();
    let group_tags: Vec<Vec<u32>> = (0..c.groups)
        .map(|g| (0..c.tags as u32).filter(|h| *h as usize % c.groups == g).collect())
        .collect();

    let mut item_group = Vec::with_capacity(c.items);
    let mut item_genres = Vec::with_capacity(c.items);
    let mut item_factors = Vec::with_capacity(c.items);
    let mut item_bias = Vec::with_capacity(c.items);
    for j in 0..c.items {
        let g = j % c.groups;
        let own = &group_tags[g];
        let mut genres = vec![own[rng.random_range(0..own.len())]];
        for _ in 0..rng.random_range(0..3) {
            let h = if rng.random::<f64>() < 0.7 {
                own[rng.random_range(0..own.len())]
            } else {
                rng.random_range(0..c.tags as u32)
            };
            if !genres.contains(&h) {
                genres.push(h);
            }
        }
        item_group.push(g);
        item_genres.push(genres);
        let noise = normal_vec(&mut rng, l);
        item_factors.push(
            centers[g]
                .iter()
                .zip(noise)
                .map(|(m, z)| 0.6 * m + 0.6 * z)
                .collect::<Vec<f64>>(),
        );
        item_bias.push(0.3 * rng.sample::<f64, _>(StandardNormal));
    }
    let by_group: Vec<Vec<usize>> = (0..c.groups)
        .map(|g| (0..c.items).filter(|&j| item_group[j] == g).collect())
        .collect();

    let scale = 1.0 / (l as f64).sqrt();
    let mut triples = Vec::new();
    let mut groups = Vec::with_capacity(c.users);
    for i in 0..c.users {
        let g = i % c.groups;
        groups.push(g);
        let taste: Vec<f64> = centers[g]
            .iter()
            .zip(normal_vec(&mut rng, l))
            .map(|(m, z)| m + 0.4 * z)
            .collect();
        let lo = (c.ratings_per_user / 2).max(1);
        let hi = (c.ratings_per_user * 3 / 2).clamp(lo, c.items);
        let count = rng.random_range(lo..=hi);
        let mut chosen = Vec::with_capacity(count);
        let mut taken = vec![false; c.items];
        let pool = &by_group[g];
        let mut pool_left = pool.len();
        while chosen.len() < count {
            let j = if pool_left > 0 && rng.random::<f64>() < c.affinity {
                pool[rng.random_range(0..pool.len())]
            } else {
                rng.random_range(0..c.items)
            };
            if !taken[j] {
                taken[j] = true;
                if item_group[j] == g {
                    pool_left -= 1;
                }
                chosen.push(j);
            }
        }
        for j in chosen {
            let affinity: f64 = taste.iter().zip(&item_factors[j]).map(|(a, b)| a * b).sum();
            let raw = 3.2 + affinity * scale + item_bias[j] + c.noise * rng.sample::<f64, _>(StandardNormal);
            let stars = raw.round().clamp(1.0, 5.0);
            triples.push((i as u64 + 1, j as u64 + 1, stars));
        }
    }

    let ratings = RatingDataset::from_external(triples)?;
    let mut tags: Vec<Vec<u32>> = vec![Vec::new(); ratings.n_items()];
    for (j, genres) in item_genres.iter().enumerate() {
        if let Some(item) = ratings.item_index(j as u64 + 1) {
            tags[item as usize] = genres.clone();
        }
    }
    let tag_names = (0..c.tags).map(|h| format!("Genre{h:02}")).collect();
    let catalog = TagCatalog::new(tag_names, tags)?;
    Ok(SyntheticData {
        ratings,
        tags: catalog,
        groups,
        item_genres,
    })
}

/// Writes `ratings.dat` and `movies.dat` in MovieLens `::` format.
pub fn write_movielens(data: &SyntheticData, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut ratings = String::new();
    for (k, r) in data.ratings.ratings().iter().enumerate() {
        writeln!(
            ratings,
            "{}::{}::{}::{}",
            data.ratings.user_id(r.user),
            data.ratings.item_id(r.item),
            r.value as i64,
            978_300_000 + k
        )
        .unwrap();
    }
    let mut movies = String::new();
    for (j, genres) in data.item_genres.iter().enumerate() {
        let names: Vec<&str> = genres
            .iter()
            .map(|&h| data.tags.tag_names()[h as usize].as_str())
            .collect();
        writeln!(movies, "{}::Synthetic Movie {} (2000)::{}", j + 1, j + 1, names.join("|")).unwrap();
    }
    let write = |name: &str, text: &str| {
        let path = dir.join(name);
        fs::write(&path, text).map_err(|e| Error::io(path, e))
    };
    write("ratings.dat", &ratings)?;
    write("movies.dat", &movies)
}
