//! Data containers and the Gaussian kernel with its conjugate
//! Normal-Inverse-Gamma base measure, plus the per-group regression variant.

mod data;
mod nig;
mod regression;

pub use data::{GroupedDataset, Observation};
pub use nig::{log_marginal, nig_draw, nig_posterior, ClusterSuffStats, NigParams, StudentT};
pub use regression::{
    beta_full_conditional, beta_full_conditional_draw, center_groups, residualize, restore,
    RegressionSpec,
};
