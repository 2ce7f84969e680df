//! Rating datasets, tag catalogs, MovieLens-format parsing and train/test splitting.
//!
//! External user and item ids are remapped to dense 0-based indices at ingest
//! (ascending external id order). Splits of a dataset share its id space, so a
//! user index means the same user in the full dataset, the training part and
//! the test part.

use std::collections::HashMap;
use std::fs;
use std::hash::Hasher;
use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::seed::Fnv1a;

/// One observed rating, in dense indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rating {
    pub user: u32,
    pub item: u32,
    pub value: f64,
}

#[derive(Debug)]
struct IdSpace {
    user_ids: Vec<u64>,
    item_ids: Vec<u64>,
    user_lookup: HashMap<u64, u32>,
    item_lookup: HashMap<u64, u32>,
}

impl IdSpace {
    fn from_sorted(user_ids: Vec<u64>, item_ids: Vec<u64>) -> Self {
        let user_lookup = user_ids
            .iter()
            .enumerate()
            .map(|(i, &id)| (id, i as u32))
            .collect();
        let item_lookup = item_ids
            .iter()
            .enumerate()
            .map(|(i, &id)| (id, i as u32))
            .collect();
        IdSpace {
            user_ids,
            item_ids,
            user_lookup,
            item_lookup,
        }
    }
}

/// Compressed adjacency: for each row, a sorted run of `(column, rating)`.
#[derive(Debug, Clone)]
struct Adjacency {
    offsets: Vec<usize>,
    entries: Vec<(u32, f64)>,
}

impl Adjacency {
    fn build(rows: usize, ratings: &[Rating], key: impl Fn(&Rating) -> (u32, u32)) -> Self {
        let mut counts = vec![0usize; rows + 1];
        for r in ratings {
            counts[key(r).0 as usize + 1] += 1;
        }
        for i in 0..rows {
            counts[i + 1] += counts[i];
        }
        let offsets = counts;
        let mut cursor = offsets.clone();
        let mut entries = vec![(0u32, 0.0f64); ratings.len()];
        for r in ratings {
            let (row, col) = key(r);
            let slot = &mut cursor[row as usize];
            entries[*slot] = (col, r.value);
            *slot += 1;
        }
        for i in 0..rows {
            entries[offsets[i]..offsets[i + 1]].sort_unstable_by_key(|e| e.0);
        }
        Adjacency { offsets, entries }
    }

    fn row(&self, i: usize) -> &[(u32, f64)] {
        &self.entries[self.offsets[i]..self.offsets[i + 1]]
    }
}

/// A sparse set of `(user, item, rating)` triples over a fixed id space.
#[derive(Debug, Clone)]
pub struct RatingDataset {
    ids: Arc<IdSpace>,
    ratings: Vec<Rating>,
    by_user: Adjacency,
    by_item: Adjacency,
}

impl RatingDataset {
    /// Builds a dataset from triples carrying external ids. Dense indices follow
    /// ascending external id order.
    pub fn from_external<I>(triples: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u64, u64, f64)>,
    {
        let triples: Vec<(u64, u64, f64)> = triples.into_iter().collect();
        let mut user_ids: Vec<u64> = triples.iter().map(|t| t.0).collect();
        let mut item_ids: Vec<u64> = triples.iter().map(|t| t.1).collect();
        user_ids.sort_unstable();
        user_ids.dedup();
        item_ids.sort_unstable();
        item_ids.dedup();
        let ids = IdSpace::from_sorted(user_ids, item_ids);
        let ratings = triples
            .iter()
            .map(|&(u, i, value)| Rating {
                user: ids.user_lookup[&u],
                item: ids.item_lookup[&i],
                value,
            })
            .collect();
        Self::with_ids(Arc::new(ids), ratings)
    }

    /// Builds a dataset directly in dense index space; external ids equal the
    /// dense indices.
    pub fn from_dense(n_users: usize, n_items: usize, ratings: Vec<Rating>) -> Result<Self> {
        let ids = IdSpace::from_sorted(
            (0..n_users as u64).collect(),
            (0..n_items as u64).collect(),
        );
        Self::with_ids(Arc::new(ids), ratings)
    }

    fn with_ids(ids: Arc<IdSpace>, ratings: Vec<Rating>) -> Result<Self> {
        let n_users = ids.user_ids.len();
        let n_items = ids.item_ids.len();
        for r in &ratings {
            if r.user as usize >= n_users || r.item as usize >= n_items {
                return Err(Error::InvalidInput(format!(
                    "rating ({}, {}) outside a {n_users}x{n_items} index space",
                    r.user, r.item
                )));
            }
            if !r.value.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "non-finite rating for ({}, {})",
                    r.user, r.item
                )));
            }
        }
        let by_user = Adjacency::build(n_users, &ratings, |r| (r.user, r.item));
        for i in 0..n_users {
            if let Some(w) = by_user.row(i).windows(2).find(|w| w[0].0 == w[1].0) {
                return Err(Error::InvalidInput(format!(
                    "duplicate rating for user {} item {}",
                    ids.user_ids[i], ids.item_ids[w[0].0 as usize]
                )));
            }
        }
        let by_item = Adjacency::build(n_items, &ratings, |r| (r.item, r.user));
        Ok(RatingDataset {
            ids,
            ratings,
            by_user,
            by_item,
        })
    }

    /// A dataset over the same id space holding a different rating subset.
    fn sibling(&self, ratings: Vec<Rating>) -> Self {
        let n_users = self.n_users();
        let n_items = self.n_items();
        RatingDataset {
            ids: Arc::clone(&self.ids),
            by_user: Adjacency::build(n_users, &ratings, |r| (r.user, r.item)),
            by_item: Adjacency::build(n_items, &ratings, |r| (r.item, r.user)),
            ratings,
        }
    }

    pub fn n_users(&self) -> usize {
        self.ids.user_ids.len()
    }

    pub fn n_items(&self) -> usize {
        self.ids.item_ids.len()
    }

    pub fn len(&self) -> usize {
        self.ratings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ratings.is_empty()
    }

    pub fn ratings(&self) -> &[Rating] {
        &self.ratings
    }

    /// `(item, rating)` pairs of a user, sorted by item.
    pub fn user_ratings(&self, user: u32) -> &[(u32, f64)] {
        self.by_user.row(user as usize)
    }

    /// `(user, rating)` pairs of an item, sorted by user.
    pub fn item_ratings(&self, item: u32) -> &[(u32, f64)] {
        self.by_item.row(item as usize)
    }

    pub fn user_id(&self, user: u32) -> u64 {
        self.ids.user_ids[user as usize]
    }

    pub fn item_id(&self, item: u32) -> u64 {
        self.ids.item_ids[item as usize]
    }

    pub fn user_index(&self, id: u64) -> Option<u32> {
        self.ids.user_lookup.get(&id).copied()
    }

    pub fn item_index(&self, id: u64) -> Option<u32> {
        self.ids.item_lookup.get(&id).copied()
    }

    /// Arithmetic mean of all ratings, `None` when empty.
    pub fn mean(&self) -> Option<f64> {
        if self.ratings.is_empty() {
            return None;
        }
        Some(self.ratings.iter().map(|r| r.value).sum::<f64>() / self.ratings.len() as f64)
    }

    /// Stable 64-bit digest of the rating triples in storage order.
    pub fn fingerprint(&self) -> u64 {
        let mut h = Fnv1a::default();
        h.write_u64(self.n_users() as u64);
        h.write_u64(self.n_items() as u64);
        for r in &self.ratings {
            h.write_u32(r.user);
            h.write_u32(r.item);
            h.write_u64(r.value.to_bits());
        }
        h.finish()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CatalogDiagnostics {
    /// Lines read from the movies source.
    pub movies_read: usize,
    /// Movies listed in the movies source but never rated.
    pub unrated_movies: usize,
    /// Rated items absent from the movies source; they carry no tags.
    pub untagged_items: usize,
}

/// Item to tag-set mapping over `n_tags` distinct tags.
#[derive(Debug, Clone)]
pub struct TagCatalog {
    tag_names: Vec<String>,
    item_tags: Vec<Vec<u32>>,
    diagnostics: CatalogDiagnostics,
}

impl TagCatalog {
    /// Builds a catalog from per-item tag index lists. Lists are sorted and
    /// deduplicated.
    pub fn new(tag_names: Vec<String>, mut item_tags: Vec<Vec<u32>>) -> Result<Self> {
        let n_tags = tag_names.len();
        for tags in &mut item_tags {
            tags.sort_unstable();
            tags.dedup();
            if let Some(&t) = tags.iter().find(|&&t| t as usize >= n_tags) {
                return Err(Error::InvalidInput(format!(
                    "tag index {t} out of range for {n_tags} tags"
                )));
            }
        }
        let untagged_items = item_tags.iter().filter(|t| t.is_empty()).count();
        Ok(TagCatalog {
            tag_names,
            item_tags,
            diagnostics: CatalogDiagnostics {
                untagged_items,
                ..Default::default()
            },
        })
    }

    pub fn n_tags(&self) -> usize {
        self.tag_names.len()
    }

    pub fn n_items(&self) -> usize {
        self.item_tags.len()
    }

    pub fn tag_names(&self) -> &[String] {
        &self.tag_names
    }

    pub fn tag_index(&self, name: &str) -> Option<u32> {
        self.tag_names
            .iter()
            .position(|t| t == name)
            .map(|p| p as u32)
    }

    /// Sorted tag indices of an item.
    pub fn item_tags(&self, item: u32) -> &[u32] {
        &self.item_tags[item as usize]
    }

    pub fn has_tag(&self, item: u32, tag: u32) -> bool {
        self.item_tags(item).binary_search(&tag).is_ok()
    }

    pub fn diagnostics(&self) -> &CatalogDiagnostics {
        &self.diagnostics
    }
}

/// Fraction of ratings that go to training, and the shuffle seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train_fraction: f64, seed: u64) -> Result<Self> {
        let spec = SplitSpec {
            train_fraction,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "train fraction must lie strictly between 0 and 1, got {}",
                self.train_fraction
            )));
        }
        Ok(())
    }
}

/// Uniform random partition of the ratings into `round(fraction * len)`
/// training triples and the remaining test triples. Both parts keep the
/// original storage order.
pub fn split(dataset: &RatingDataset, spec: &SplitSpec) -> Result<(RatingDataset, RatingDataset)> {
    spec.validate()?;
    if dataset.is_empty() {
        return Err(Error::Empty("rating dataset"));
    }
    let n = dataset.len();
    let n_train = (spec.train_fraction * n as f64).round() as usize;
    if n_train == 0 || n_train >= n {
        return Err(Error::InvalidConfig(format!(
            "train fraction {} of {n} ratings leaves an empty train or test part",
            spec.train_fraction
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    order.shuffle(&mut rng);
    let mut in_train = vec![false; n];
    for &k in &order[..n_train] {
        in_train[k] = true;
    }
    let (mut train, mut test) = (Vec::with_capacity(n_train), Vec::with_capacity(n - n_train));
    for (k, r) in dataset.ratings.iter().enumerate() {
        if in_train[k] {
            train.push(*r);
        } else {
            test.push(*r);
        }
    }
    Ok((dataset.sibling(train), dataset.sibling(test)))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

/// Yields `(line_number, line)` with line endings stripped, skipping blank lines.
fn lines(bytes: &[u8]) -> impl Iterator<Item = (usize, &[u8])> {
    bytes
        .split(|&b| b == b'\n')
        .enumerate()
        .map(|(k, line)| (k + 1, line.strip_suffix(b"\r").unwrap_or(line)))
        .filter(|(_, line)| !line.iter().all(u8::is_ascii_whitespace))
}

fn split_fields(line: &[u8]) -> Vec<&[u8]> {
    let mut fields = Vec::with_capacity(4);
    let mut start = 0;
    let mut k = 0;
    while k + 1 < line.len() {
        if line[k] == b':' && line[k + 1] == b':' {
            fields.push(&line[start..k]);
            k += 2;
            start = k;
        } else {
            k += 1;
        }
    }
    fields.push(&line[start..]);
    fields
}

fn latin1(bytes: &[u8]) -> String {
    bytes.iter().map(|&b| b as char).collect()
}

fn parse_int<T: std::str::FromStr>(field: &[u8]) -> Option<T> {
    std::str::from_utf8(field).ok()?.trim().parse().ok()
}

/// Parses `UserID::MovieID::Rating::Timestamp` lines. Timestamps are checked
/// for shape and discarded.
pub fn read_ratings(bytes: &[u8], source_name: &str) -> Result<RatingDataset> {
    let mut triples = Vec::new();
    let mut first_line = HashMap::new();
    for (line_no, line) in lines(bytes) {
        let fields = split_fields(line);
        if fields.len() != 4 {
            return Err(Error::parse(
                source_name,
                line_no,
                format!("expected 4 `::`-separated fields, found {}", fields.len()),
            ));
        }
        let user: u64 = parse_int(fields[0])
            .filter(|&u| u > 0)
            .ok_or_else(|| Error::parse(source_name, line_no, "UserID is not a positive integer"))?;
        let item: u64 = parse_int(fields[1])
            .filter(|&m| m > 0)
            .ok_or_else(|| Error::parse(source_name, line_no, "MovieID is not a positive integer"))?;
        let stars: i64 = parse_int(fields[2])
            .ok_or_else(|| Error::parse(source_name, line_no, "Rating is not an integer"))?;
        if !(1..=5).contains(&stars) {
            return Err(Error::parse(
                source_name,
                line_no,
                format!("rating {stars} outside 1-5"),
            ));
        }
        parse_int::<i64>(fields[3])
            .ok_or_else(|| Error::parse(source_name, line_no, "Timestamp is not an integer"))?;
        if let Some(prev) = first_line.insert((user, item), line_no) {
            return Err(Error::parse(
                source_name,
                line_no,
                format!("duplicate rating for user {user} movie {item} (first on line {prev})"),
            ));
        }
        triples.push((user, item, stars as f64));
    }
    if triples.is_empty() {
        return Err(Error::Empty("ratings input"));
    }
    RatingDataset::from_external(triples)
}

pub fn parse_ratings(path: impl AsRef<Path>) -> Result<RatingDataset> {
    let path = path.as_ref();
    read_ratings(&read_bytes(path)?, &path.display().to_string())
}

/// Parses `MovieID::Title::Genre1|Genre2|...` lines against the item space of
/// `dataset`. Tag indices follow first appearance in the file. Movies that were
/// never rated still contribute their genres to the tag vocabulary.
pub fn read_movies(bytes: &[u8], source_name: &str, dataset: &RatingDataset) -> Result<TagCatalog> {
    let mut tag_names: Vec<String> = Vec::new();
    let mut tag_lookup: HashMap<String, u32> = HashMap::new();
    let mut item_tags: Vec<Option<Vec<u32>>> = vec![None; dataset.n_items()];
    let mut seen = HashMap::new();
    let mut diagnostics = CatalogDiagnostics::default();
    for (line_no, line) in lines(bytes) {
        let fields = split_fields(line);
        if fields.len() != 3 {
            return Err(Error::parse(
                source_name,
                line_no,
                format!("expected 3 `::`-separated fields, found {}", fields.len()),
            ));
        }
        let movie: u64 = parse_int(fields[0])
            .filter(|&m| m > 0)
            .ok_or_else(|| Error::parse(source_name, line_no, "MovieID is not a positive integer"))?;
        if let Some(prev) = seen.insert(movie, line_no) {
            return Err(Error::parse(
                source_name,
                line_no,
                format!("movie {movie} already listed on line {prev}"),
            ));
        }
        diagnostics.movies_read += 1;
        let mut tags = Vec::new();
        for genre in fields[2].split(|&b| b == b'|') {
            let name = latin1(genre).trim().to_string();
            if name.is_empty() {
                continue;
            }
            let next = tag_names.len() as u32;
            let idx = *tag_lookup.entry(name.clone()).or_insert_with(|| {
                tag_names.push(name);
                next
            });
            tags.push(idx);
        }
        match dataset.item_index(movie) {
            Some(item) => item_tags[item as usize] = Some(tags),
            None => diagnostics.unrated_movies += 1,
        }
    }
    let untagged_items = item_tags.iter().filter(|t| t.is_none()).count();
    let mut catalog = TagCatalog::new(
        tag_names,
        item_tags.into_iter().map(Option::unwrap_or_default).collect(),
    )?;
    diagnostics.untagged_items = untagged_items;
    catalog.diagnostics = diagnostics;
    Ok(catalog)
}

pub fn parse_movies(path: impl AsRef<Path>, dataset: &RatingDataset) -> Result<TagCatalog> {
    let path = path.as_ref();
    read_movies(&read_bytes(path)?, &path.display().to_string(), dataset)
}
