//! Rating prediction with matrix factorization regularized by tag-based user
//! clusters.
//!
//! The pipeline: parse MovieLens-format ratings and movies ([`dataset`]),
//! build per-user tag-interest vectors and cluster users with K-means
//! ([`clustering`]), weight same-cluster pairs by the cosine of their common
//! ratings ([`similarity`]), then train plain or cluster-regularized matrix
//! factorization by SGD ([`factorization`]) and score everything with MAE and
//! RMSE ([`evaluation`]).

pub mod clustering;
pub mod dataset;
mod error;
pub mod evaluation;
pub mod factorization;
pub mod seed;
pub mod similarity;
pub mod synthetic;

pub use error::{Error, Result};
