//! From chain output to decisions: co-clustering similarity, a partition
//! point estimate, agreement indices and predictive densities.

mod density;
mod partition;

pub use density::{default_grid, predictive_density, predictive_score, trapezoid};
pub use partition::{ari, cce, min_vi, similarity, vi_score, PartitionEstimate, SimilarityMatrix};
