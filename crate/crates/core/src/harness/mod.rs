//! Data ingestion, simulated experiments, run configuration, chain output
//! files and the timing benchmark behind the `hmfm` binary.

pub mod bench;
pub mod config;
pub mod experiments;
pub mod ingest;
pub mod output;

pub use bench::{bench, loglog_slope, BenchRow};
pub use config::{fit, FitResult, RunConfig};
pub use experiments::{generate_experiment, Experiment, ExperimentSpec, GaussianMixture};
pub use ingest::{ingest_csv, parse_csv};
