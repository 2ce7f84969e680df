//! Rating predictors: per-user and per-item means, regularized matrix
//! factorization, and matrix factorization with the cluster regularizer.

mod baseline;
mod model;
mod objective;
mod sgd;

pub use baseline::{BaselineKind, BaselineModel};
pub use model::{FactorModel, Predictor, TrainingConfig};
pub use objective::{gradient, objective, FactorGradient};
pub use sgd::{train_mf, train_ucmf, SgdTrainer};
