use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Anything that predicts a rating for a `(user, item)` pair.
pub trait Predictor {
    fn predict(&self, user: u32, item: u32) -> f64;
}

/// Hyperparameters of SGD training.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    /// Latent dimension.
    pub factors: usize,
    /// Weight of the user-factor penalty.
    pub lambda1: f64,
    /// Weight of the item-factor penalty.
    pub lambda2: f64,
    /// Weight of the cluster regularizer. Ignored by plain MF.
    pub alpha: f64,
    /// Learning rate.
    pub eta: f64,
    pub epochs: usize,
    /// Initial factor entries are uniform in `[0, init_scale)`.
    pub init_scale: f64,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            factors: 10,
            lambda1: 0.01,
            lambda2: 0.01,
            alpha: 0.001,
            eta: 0.005,
            epochs: 50,
            init_scale: 0.1,
            seed: 0,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.factors == 0 {
            return bad("factors must be at least 1".into());
        }
        for (name, v) in [
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("alpha", self.alpha),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        for (name, v) in [("eta", self.eta), ("init_scale", self.init_scale)] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be finite and positive, got {v}"));
            }
        }
        Ok(())
    }
}

/// User and item latent factors.
///
/// Factors are stored entity-major: the `factors` values of user `i` are
/// contiguous. Entities without training ratings are marked unseen and
/// predicted by the global training mean.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorModel {
    pub(crate) factors: usize,
    pub(crate) users: Vec<f64>,
    pub(crate) items: Vec<f64>,
    pub(crate) user_seen: Vec<bool>,
    pub(crate) item_seen: Vec<bool>,
    pub(crate) global_mean: f64,
    pub(crate) epoch_losses: Vec<f64>,
}

impl FactorModel {
    /// Wraps explicit factor matrices (entity-major). Every entity counts as seen.
    pub fn from_parts(factors: usize, users: Vec<f64>, items: Vec<f64>, global_mean: f64) -> Result<Self> {
        if factors == 0 || !users.len().is_multiple_of(factors) || !items.len().is_multiple_of(factors) {
            return Err(Error::InvalidInput(format!(
                "factor buffers of {} and {} values do not fit L={factors}",
                users.len(),
                items.len()
            )));
        }
        let (n, m) = (users.len() / factors, items.len() / factors);
        Ok(FactorModel {
            factors,
            users,
            items,
            user_seen: vec![true; n],
            item_seen: vec![true; m],
            global_mean,
            epoch_losses: Vec::new(),
        })
    }

    pub fn factors(&self) -> usize {
        self.factors
    }

    pub fn n_users(&self) -> usize {
        self.user_seen.len()
    }

    pub fn n_items(&self) -> usize {
        self.item_seen.len()
    }

    pub fn user_factors(&self, user: u32) -> &[f64] {
        &self.users[user as usize * self.factors..][..self.factors]
    }

    pub fn item_factors(&self, item: u32) -> &[f64] {
        &self.items[item as usize * self.factors..][..self.factors]
    }

    /// All user factors, entity-major.
    pub fn users(&self) -> &[f64] {
        &self.users
    }

    pub fn items(&self) -> &[f64] {
        &self.items
    }

    pub fn global_mean(&self) -> f64 {
        self.global_mean
    }

    pub fn user_seen(&self, user: u32) -> bool {
        self.user_seen[user as usize]
    }

    pub fn item_seen(&self, item: u32) -> bool {
        self.item_seen[item as usize]
    }

    /// Training loss (half the summed squared residuals seen during each SGD pass).
    pub fn epoch_losses(&self) -> &[f64] {
        &self.epoch_losses
    }

    /// Raw inner product, ignoring the seen flags.
    pub fn score(&self, user: u32, item: u32) -> f64 {
        dot(self.user_factors(user), self.item_factors(item))
    }

    pub fn is_finite(&self) -> bool {
        self.users.iter().chain(&self.items).all(|v| v.is_finite())
    }

    const MAGIC: &'static [u8; 8] = b"UCMFMDL1";

    /// Binary dump: magic, `L`, `N`, `M` (u64 LE), global mean, `U` as an
    /// `L x N` row-major matrix, `V` as `L x M` row-major, then one seen byte
    /// per user and per item. All reals are f64 LE bit patterns.
    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let (l, n, m) = (self.factors, self.n_users(), self.n_items());
        w.write_all(Self::MAGIC)?;
        for v in [l, n, m] {
            w.write_all(&(v as u64).to_le_bytes())?;
        }
        w.write_all(&self.global_mean.to_le_bytes())?;
        for (buf, count) in [(&self.users, n), (&self.items, m)] {
            for d in 0..l {
                for e in 0..count {
                    w.write_all(&buf[e * l + d].to_le_bytes())?;
                }
            }
        }
        let flags: Vec<u8> = self.user_seen.iter().chain(&self.item_seen).map(|&s| s as u8).collect();
        w.write_all(&flags)?;
        w.flush()
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let fail = |what: &str| Error::ModelFormat(what.to_string());
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(|_| fail("truncated header"))?;
        if &magic != Self::MAGIC {
            return Err(fail("bad magic"));
        }
        let mut word = [0u8; 8];
        let mut next = |r: &mut R| -> Result<[u8; 8]> {
            r.read_exact(&mut word).map_err(|_| fail("truncated body"))?;
            Ok(word)
        };
        let l = u64::from_le_bytes(next(&mut r)?) as usize;
        let n = u64::from_le_bytes(next(&mut r)?) as usize;
        let m = u64::from_le_bytes(next(&mut r)?) as usize;
        if l == 0 {
            return Err(fail("zero latent dimension"));
        }
        let global_mean = f64::from_le_bytes(next(&mut r)?);
        let mut read_matrix = |r: &mut R, count: usize| -> Result<Vec<f64>> {
            let mut buf = vec![0.0; l * count];
            for d in 0..l {
                for e in 0..count {
                    buf[e * l + d] = f64::from_le_bytes(next(r)?);
                }
            }
            Ok(buf)
        };
        let users = read_matrix(&mut r, n)?;
        let items = read_matrix(&mut r, m)?;
        let mut flags = vec![0u8; n + m];
        r.read_exact(&mut flags).map_err(|_| fail("truncated seen flags"))?;
        if flags.iter().any(|&f| f > 1) {
            return Err(fail("seen flag not 0 or 1"));
        }
        let mut rest = Vec::new();
        r.read_to_end(&mut rest).map_err(|_| fail("read error"))?;
        if !rest.is_empty() {
            return Err(fail("trailing bytes"));
        }
        Ok(FactorModel {
            factors: l,
            users,
            items,
            user_seen: flags[..n].iter().map(|&f| f == 1).collect(),
            item_seen: flags[n..].iter().map(|&f| f == 1).collect(),
            global_mean,
            epoch_losses: Vec::new(),
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(BufWriter::new(file)).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(BufReader::new(file))
    }
}

impl Predictor for FactorModel {
    /// Inner product of the factors, or the global mean for unseen entities.
    fn predict(&self, user: u32, item: u32) -> f64 {
        if !self.user_seen(user) || !self.item_seen(item) {
            return self.global_mean;
        }
        self.score(user, item)
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
