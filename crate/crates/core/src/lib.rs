//! Hierarchical mixtures of finite mixtures.
//!
//! Groups of observations are modelled with a vector of finite Dirichlet
//! processes: all groups draw from the same random, finite set of atoms with
//! group-specific weights, so clusters are shared across groups while the
//! number of clusters is itself random.

pub mod error;
pub mod harness;
pub mod likelihood;
pub mod postprocess;
pub mod prior;
pub mod quadrature;
pub mod sampler;
pub mod special;

pub use error::{HmfmError, Result};
