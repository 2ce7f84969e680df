use super::Predictor;
use crate::dataset::RatingDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaselineKind {
    UserMean,
    ItemMean,
}

/// Predicts every rating of a user (or item) by that entity's mean training
/// rating, falling back to the global training mean for unseen entities.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineModel {
    kind: BaselineKind,
    means: Vec<Option<f64>>,
    global_mean: f64,
}

impl BaselineModel {
    pub fn train(train: &RatingDataset, kind: BaselineKind) -> Result<Self> {
        let global_mean = train.mean().ok_or(Error::Empty("training set"))?;
        let means = match kind {
            BaselineKind::UserMean => (0..train.n_users() as u32)
                .map(|u| mean_of(train.user_ratings(u)))
                .collect(),
            BaselineKind::ItemMean => (0..train.n_items() as u32)
                .map(|i| mean_of(train.item_ratings(i)))
                .collect(),
        };
        Ok(BaselineModel {
            kind,
            means,
            global_mean,
        })
    }

    pub fn kind(&self) -> BaselineKind {
        self.kind
    }

    pub fn global_mean(&self) -> f64 {
        self.global_mean
    }

    /// Mean of one user or item, `None` when it has no training ratings.
    pub fn entity_mean(&self, index: u32) -> Option<f64> {
        self.means[index as usize]
    }
}

fn mean_of(entries: &[(u32, f64)]) -> Option<f64> {
    if entries.is_empty() {
        None
    } else {
        Some(entries.iter().map(|e| e.1).sum::<f64>() / entries.len() as f64)
    }
}

impl Predictor for BaselineModel {
    fn predict(&self, user: u32, item: u32) -> f64 {
        let key = match self.kind {
            BaselineKind::UserMean => user,
            BaselineKind::ItemMean => item,
        };
        self.means[key as usize].unwrap_or(self.global_mean)
    }
}
