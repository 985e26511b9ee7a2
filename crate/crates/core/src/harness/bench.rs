use std::time::Instant;

use super::config::RunConfig;
use super::experiments::{generate_experiment, ExperimentSpec};
use crate::error::{HmfmError, Result};
use crate::sampler::{self, Algorithm};

/// Mean wall time per sweep of one sampler at one sample size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchRow {
    pub algorithm: Algorithm,
    pub n: usize,
    pub seconds_per_iter: f64,
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(HmfmError::Dimension("need at least two paired points".into()));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(HmfmError::Domain("log-log fit needs positive values".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Times both samplers on the two-group design with total sizes `sizes`.
/// Data generation and any file output are outside the timed region.
pub fn bench(sizes: &[usize], iterations: usize, seed: u64) -> Result<Vec<BenchRow>> {
    let config = RunConfig {
        iterations,
        burn_in: iterations / 2,
        seed,
        lambda0: Some(10.0),
        v_lambda: Some(2.0),
        gamma0: Some(0.01),
        record_components: false,
        ..RunConfig::default()
    };
    let mut rows = Vec::new();
    for algorithm in [Algorithm::Conditional, Algorithm::Marginal] {
        for &n in sizes {
            let exp = generate_experiment(&ExperimentSpec { id: 2, n: Some(n), seed })?;
            let priors = config.priors(&exp.data)?;
            let cfg = config.sampler_config(0);
            let start = Instant::now();
            sampler::run(algorithm, &exp.data, &cfg, &priors)?;
            let secs = start.elapsed().as_secs_f64();
            rows.push(BenchRow {
                algorithm,
                n,
                seconds_per_iter: secs / iterations as f64,
            });
        }
    }
    Ok(rows)
}
