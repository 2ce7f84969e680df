//! Tag-interest vectors and K-means user clustering.

mod interest;
mod kmeans;

pub use interest::InterestMatrix;
pub use kmeans::{kmeans, kmeans_rows, ClusterAssignment, ClusteringConfig};
