//! MCMC for the hierarchical mixture: a conditional (blocked Gibbs) sampler
//! that keeps the mixing measures, and a marginal sampler that integrates
//! them out and moves observations between shared clusters.

pub mod conditional;
pub mod marginal;

mod common;
mod kmeans;

pub use common::{
    sample_lambda, sample_log_gamma, Algorithm, AdaptTargets, ChainOutput, ClusterRecord,
    ComponentRecord, InitPartition, IterationRecord, ModelPriors, RobbinsMonro, SamplerConfig,
};
pub use kmeans::kmeans_1d;

use crate::error::Result;
use crate::likelihood::GroupedDataset;

/// Runs one chain of the chosen algorithm.
pub fn run(
    algorithm: Algorithm,
    data: &GroupedDataset,
    config: &SamplerConfig,
    priors: &ModelPriors,
) -> Result<ChainOutput> {
    match algorithm {
        Algorithm::Conditional => conditional::run(data, config, priors),
        Algorithm::Marginal => marginal::run(data, config, priors),
    }
}
