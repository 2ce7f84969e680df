use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::model::dot;
use super::{FactorModel, TrainingConfig};
use crate::dataset::RatingDataset;
use crate::error::{Error, Result};
use crate::similarity::NeighborWeights;

/// Stochastic gradient descent over the observed training ratings, one epoch
/// at a time.
///
/// For each rating `(i, j)` in a freshly shuffled order, with residual
/// `e = U_i.V_j - R_ij`:
///
/// ```text
/// U_i <- U_i - eta * (e V_j + lambda1 U_i + 2 alpha (W_i U_i - S_i))
/// V_j <- V_j - eta * (e U_i + lambda2 V_j)
/// ```
///
/// where `W_i` is the neighbor weight sum of user `i` and
/// `S_i = sum_f Sim(i,f) U_f` is refreshed once at the start of every epoch.
/// Users with neighbors but no training ratings take one pull-only step per
/// epoch. Without weights, or with `alpha = 0`, this is plain regularized MF.
pub struct SgdTrainer<'a> {
    train: &'a RatingDataset,
    weights: Option<&'a NeighborWeights>,
    config: TrainingConfig,
    model: FactorModel,
    rng: ChaCha8Rng,
    order: Vec<u32>,
    neighbor_sums: Vec<f64>,
    epoch: usize,
}

impl<'a> SgdTrainer<'a> {
    /// Plain MF; `config.alpha` is ignored.
    pub fn mf(train: &'a RatingDataset, config: &TrainingConfig) -> Result<Self> {
        Self::new(train, None, config)
    }

    pub fn ucmf(train: &'a RatingDataset, weights: &'a NeighborWeights, config: &TrainingConfig) -> Result<Self> {
        if weights.n_users() != train.n_users() {
            return Err(Error::InvalidInput(format!(
                "neighbor weights cover {} users, ratings have {}",
                weights.n_users(),
                train.n_users()
            )));
        }
        Self::new(train, Some(weights), config)
    }

    fn new(train: &'a RatingDataset, weights: Option<&'a NeighborWeights>, config: &TrainingConfig) -> Result<Self> {
        config.validate()?;
        let global_mean = train.mean().ok_or(Error::Empty("training set"))?;
        let l = config.factors;
        let (n, m) = (train.n_users(), train.n_items());
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut init = |count: usize| -> Vec<f64> {
            (0..count).map(|_| rng.random::<f64>() * config.init_scale).collect()
        };
        let users = init(n * l);
        let items = init(m * l);
        let model = FactorModel {
            factors: l,
            users,
            items,
            user_seen: (0..n as u32).map(|u| !train.user_ratings(u).is_empty()).collect(),
            item_seen: (0..m as u32).map(|i| !train.item_ratings(i).is_empty()).collect(),
            global_mean,
            epoch_losses: Vec::with_capacity(config.epochs),
        };
        let weights = weights.filter(|w| config.alpha != 0.0 && !w.is_empty());
        Ok(SgdTrainer {
            train,
            weights,
            config: config.clone(),
            model,
            rng,
            order: (0..train.len() as u32).collect(),
            neighbor_sums: if weights.is_some() { vec![0.0; n * l] } else { Vec::new() },
            epoch: 0,
        })
    }

    /// Epochs completed so far.
    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn model(&self) -> &FactorModel {
        &self.model
    }

    pub fn into_model(self) -> FactorModel {
        self.model
    }

    fn refresh_neighbor_sums(&mut self, weights: &NeighborWeights) {
        let l = self.model.factors;
        let users = &self.model.users;
        for (i, s) in self.neighbor_sums.chunks_mut(l).enumerate() {
            s.fill(0.0);
            for (f, w) in weights.iter(i) {
                let uf = &users[f as usize * l..][..l];
                for (acc, x) in s.iter_mut().zip(uf) {
                    *acc += w * x;
                }
            }
        }
    }

    /// Runs one pass over the training ratings and returns its loss.
    pub fn run_epoch(&mut self) -> Result<f64> {
        let l = self.model.factors;
        let TrainingConfig {
            lambda1,
            lambda2,
            alpha,
            eta,
            ..
        } = self.config;
        self.order.shuffle(&mut self.rng);
        if let Some(weights) = self.weights {
            self.refresh_neighbor_sums(weights);
        }

        let ratings = self.train.ratings();
        let FactorModel { users, items, .. } = &mut self.model;
        let mut loss = 0.0;
        match self.weights {
            None => {
                for &k in &self.order {
                    let r = ratings[k as usize];
                    let u = &mut users[r.user as usize * l..][..l];
                    let v = &mut items[r.item as usize * l..][..l];
                    let e = dot(u, v) - r.value;
                    loss += 0.5 * e * e;
                    for d in 0..l {
                        let (ud, vd) = (u[d], v[d]);
                        u[d] = ud - eta * (e * vd + lambda1 * ud);
                        v[d] = vd - eta * (e * ud + lambda2 * vd);
                    }
                }
            }
            Some(weights) => {
                let pull = 2.0 * alpha;
                for &k in &self.order {
                    let r = ratings[k as usize];
                    let i = r.user as usize;
                    let u = &mut users[i * l..][..l];
                    let v = &mut items[r.item as usize * l..][..l];
                    let s = &self.neighbor_sums[i * l..][..l];
                    let wi = weights.weight_sum(i);
                    let e = dot(u, v) - r.value;
                    loss += 0.5 * e * e;
                    for d in 0..l {
                        let (ud, vd) = (u[d], v[d]);
                        u[d] = ud - eta * (e * vd + lambda1 * ud + pull * (wi * ud - s[d]));
                        v[d] = vd - eta * (e * ud + lambda2 * vd);
                    }
                }
                for i in 0..self.train.n_users() {
                    let wi = weights.weight_sum(i);
                    if wi == 0.0 || !self.train.user_ratings(i as u32).is_empty() {
                        continue;
                    }
                    let u = &mut users[i * l..][..l];
                    let s = &self.neighbor_sums[i * l..][..l];
                    for d in 0..l {
                        u[d] -= eta * pull * (wi * u[d] - s[d]);
                    }
                }
            }
        }

        self.epoch += 1;
        if !loss.is_finite() || !self.model.is_finite() {
            return Err(Error::Diverged { epoch: self.epoch });
        }
        self.model.epoch_losses.push(loss);
        Ok(loss)
    }

    /// Runs the remaining configured epochs.
    pub fn run(mut self) -> Result<FactorModel> {
        while self.epoch < self.config.epochs {
            self.run_epoch()?;
        }
        Ok(self.model)
    }
}

/// Regularized MF without the cluster term.
pub fn train_mf(train: &RatingDataset, config: &TrainingConfig) -> Result<FactorModel> {
    SgdTrainer::mf(train, config)?.run()
}

/// MF with the similarity-weighted cluster regularizer.
pub fn train_ucmf(train: &RatingDataset, weights: &NeighborWeights, config: &TrainingConfig) -> Result<FactorModel> {
    SgdTrainer::ucmf(train, weights, config)?.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Rating;
    use crate::factorization::Predictor;

    fn r(user: u32, item: u32, value: f64) -> Rating {
        Rating { user, item, value }
    }

    #[test]
    fn rank_one_exact_fit() {
        let train = RatingDataset::from_dense(1, 1, vec![r(0, 0, 4.0)]).unwrap();
        let config = TrainingConfig {
            factors: 2,
            lambda1: 0.0,
            lambda2: 0.0,
            eta: 0.05,
            epochs: 2000,
            ..Default::default()
        };
        let model = train_mf(&train, &config).unwrap();
        assert!((model.predict(0, 0) - 4.0).abs() < 1e-3);
    }

    #[test]
    fn divergence_names_the_epoch() {
        let train = RatingDataset::from_dense(1, 1, vec![r(0, 0, 5.0)]).unwrap();
        let config = TrainingConfig {
            eta: 10.0,
            epochs: 100,
            ..Default::default()
        };
        match train_mf(&train, &config) {
            Err(Error::Diverged { epoch }) => assert!(epoch >= 1 && epoch <= 100),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn cold_entities_predict_the_mean() {
        let train = RatingDataset::from_dense(2, 2, vec![r(0, 0, 4.0), r(0, 1, 2.0)]).unwrap();
        let model = train_mf(&train, &TrainingConfig { epochs: 3, ..Default::default() }).unwrap();
        assert!(!model.user_seen(1));
        assert_eq!(model.predict(1, 0), 3.0);
        assert_eq!(model.epoch_losses().len(), 3);
    }

    #[test]
    fn rejects_mismatched_weights() {
        let train = RatingDataset::from_dense(2, 1, vec![r(0, 0, 4.0)]).unwrap();
        let w = NeighborWeights::empty(3);
        assert!(train_ucmf(&train, &w, &TrainingConfig::default()).is_err());
    }

    #[test]
    fn empty_training_set_is_rejected() {
        let train = RatingDataset::from_dense(1, 1, vec![]).unwrap();
        assert!(matches!(train_mf(&train, &TrainingConfig::default()), Err(Error::Empty(_))));
    }
}
