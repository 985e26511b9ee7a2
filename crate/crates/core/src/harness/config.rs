use std::path::Path;

use serde::Deserialize;

use crate::error::{HmfmError, Result};
use crate::likelihood::{GroupedDataset, NigParams, RegressionSpec};
use crate::postprocess::{default_grid, min_vi, predictive_density, similarity, PartitionEstimate, SimilarityMatrix};
use crate::prior::{elicit, ElicitationSpec, HyperPriorParams};
use crate::sampler::{self, Algorithm, ChainOutput, InitPartition, ModelPriors, SamplerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseRule {
    /// `μ₀ = mean(y)`, `k₀ = 1/range(y)²`, with `ν₀` and `σ₀²` from the file.
    Auto,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Likelihood {
    Plain,
    Regression,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitRule {
    Kmeans,
    One,
}

/// Everything `hmfm fit` needs, read from a flat `key = value` file.
///
/// The hyperprior is either given directly (`a_gamma`, `b_gamma`,
/// `a_lambda`, `b_lambda`) or elicited from `lambda0`, `v_lambda`, `gamma0`;
/// with neither, all four default to 1.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub chains: usize,
    pub base: BaseRule,
    pub mu0: Option<f64>,
    pub k0: Option<f64>,
    pub nu0: f64,
    pub sigma0_sq: f64,
    pub a_gamma: Option<f64>,
    pub b_gamma: Option<f64>,
    pub a_lambda: Option<f64>,
    pub b_lambda: Option<f64>,
    pub lambda0: Option<f64>,
    pub v_lambda: Option<f64>,
    pub gamma0: Option<f64>,
    pub likelihood: Likelihood,
    pub beta_mean: f64,
    pub beta_var: f64,
    pub fix_lambda: bool,
    pub fix_gamma: bool,
    pub lambda_init: Option<f64>,
    pub gamma_init: Option<f64>,
    pub init: InitRule,
    pub centers: usize,
    pub prior_only: bool,
    pub m_star_cap: usize,
    pub record_components: bool,
    pub out: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            algorithm: Algorithm::Conditional,
            iterations: 2_000,
            burn_in: 1_000,
            thin: 1,
            seed: 1,
            chains: 1,
            base: BaseRule::Auto,
            mu0: None,
            k0: None,
            nu0: 4.0,
            sigma0_sq: 0.5,
            a_gamma: None,
            b_gamma: None,
            a_lambda: None,
            b_lambda: None,
            lambda0: None,
            v_lambda: None,
            gamma0: None,
            likelihood: Likelihood::Plain,
            beta_mean: 0.0,
            beta_var: 1.0,
            fix_lambda: false,
            fix_gamma: false,
            lambda_init: None,
            gamma_init: None,
            init: InitRule::Kmeans,
            centers: 20,
            prior_only: false,
            m_star_cap: 10_000,
            record_components: true,
            out: "hmfm_out".into(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| HmfmError::Config(e.message().to_string()))
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Sampler settings for chain `chain` (seed `seed + chain`).
    pub fn sampler_config(&self, chain: usize) -> SamplerConfig {
        SamplerConfig {
            iterations: self.iterations,
            burn_in: self.burn_in,
            thin: self.thin,
            seed: self.seed.wrapping_add(chain as u64),
            prior_only: self.prior_only,
            init: match self.init {
                InitRule::Kmeans => InitPartition::KMeans { centers: self.centers },
                InitRule::One => InitPartition::OneCluster,
            },
            fix_lambda: self.fix_lambda,
            fix_gamma: self.fix_gamma,
            m_star_cap: self.m_star_cap,
            record_components: self.record_components,
            ..SamplerConfig::default()
        }
    }

    pub fn hyperprior(&self, d: usize) -> Result<HyperPriorParams> {
        let direct = [self.a_gamma, self.b_gamma, self.a_lambda, self.b_lambda];
        let elicited = [self.lambda0, self.v_lambda, self.gamma0];
        match (direct.iter().any(Option::is_some), elicited.iter().any(Option::is_some)) {
            (true, true) => Err(HmfmError::Config(
                "give either a_gamma/b_gamma/a_lambda/b_lambda or lambda0/v_lambda/gamma0, not both".into(),
            )),
            (true, false) => match direct {
                [Some(a), Some(b), Some(c), Some(e)] => HyperPriorParams::new(a, b, c, e),
                _ => Err(HmfmError::Config("all four of a_gamma, b_gamma, a_lambda, b_lambda are needed".into())),
            },
            (false, true) => match elicited {
                [Some(lambda0), Some(v_lambda), Some(gamma0)] => elicit(&ElicitationSpec {
                    lambda0,
                    v_lambda,
                    gamma0,
                    d,
                }),
                _ => Err(HmfmError::Config("all three of lambda0, v_lambda, gamma0 are needed".into())),
            },
            (false, false) => HyperPriorParams::new(1.0, 1.0, 1.0, 1.0),
        }
    }

    pub fn base_measure(&self, data: &GroupedDataset) -> Result<NigParams> {
        match self.base {
            BaseRule::Fixed => match (self.mu0, self.k0) {
                (Some(mu0), Some(k0)) => NigParams::new(mu0, k0, self.nu0, self.sigma0_sq),
                _ => Err(HmfmError::Config("base = \"fixed\" needs mu0 and k0".into())),
            },
            BaseRule::Auto => {
                let ys = data.pooled_marks();
                if ys.is_empty() || self.prior_only && data.n_total() == 0 {
                    return Err(HmfmError::Config("the automatic base measure needs data".into()));
                }
                let lo = ys.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let range = if hi > lo { hi - lo } else { 1.0 };
                // responses are centred per group under regression
                let mu0 = match self.likelihood {
                    Likelihood::Plain => ys.iter().sum::<f64>() / ys.len() as f64,
                    Likelihood::Regression => 0.0,
                };
                NigParams::new(mu0, 1.0 / (range * range), self.nu0, self.sigma0_sq)
            }
        }
    }

    pub fn priors(&self, data: &GroupedDataset) -> Result<ModelPriors> {
        let mut p = ModelPriors::new(self.base_measure(data)?, self.hyperprior(data.d())?);
        p.lambda_init = self.lambda_init;
        p.gamma_init = self.gamma_init.map(|g| vec![g; data.d()]);
        if self.likelihood == Likelihood::Regression {
            p.regression = Some(RegressionSpec::isotropic(data.r(), self.beta_mean, self.beta_var)?);
        }
        Ok(p)
    }
}

/// Chains plus the pooled summaries written by `hmfm fit`.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub chains: Vec<ChainOutput>,
    pub similarity: SimilarityMatrix,
    pub partition: PartitionEstimate,
    /// Density grid and one density per group; empty without component records.
    pub grid: Vec<f64>,
    pub densities: Vec<Vec<f64>>,
}

/// Runs `config.chains` chains in parallel and summarizes the pooled draws.
pub fn fit(data: &GroupedDataset, config: &RunConfig) -> Result<FitResult> {
    if config.chains == 0 {
        return Err(HmfmError::Config("chains must be at least 1".into()));
    }
    let priors = config.priors(data)?;
    let results: Vec<Result<ChainOutput>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..config.chains)
            .map(|c| {
                let priors = &priors;
                s.spawn(move || sampler::run(config.algorithm, data, &config.sampler_config(c), priors))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("chain thread panicked")).collect()
    });
    let chains = results.into_iter().collect::<Result<Vec<_>>>()?;
    let records: Vec<_> = chains.iter().flat_map(|c| c.records.iter().cloned()).collect();
    let sim = similarity(&records)?;
    let partition = min_vi(&records, &sim)?;
    let (grid, densities) = if config.record_components && config.likelihood == Likelihood::Plain {
        let grid = default_grid(data);
        let pooled = ChainOutput {
            records,
            ..chains[0].clone()
        };
        let dens = (0..data.d())
            .map(|j| predictive_density(&pooled, j, &grid))
            .collect::<Result<Vec<_>>>()?;
        (grid, dens)
    } else {
        (Vec::new(), Vec::new())
    };
    Ok(FitResult {
        chains,
        similarity: sim,
        partition,
        grid,
        densities,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_file() {
        let c = RunConfig::from_toml(
            "algorithm = \"marginal\"\niterations = 50\nburn_in = 10\nlambda0 = 5\nv_lambda = 5\ngamma0 = 0.5\n",
        )
        .unwrap();
        assert_eq!(c.algorithm, Algorithm::Marginal);
        assert_eq!(c.iterations, 50);
        let h = c.hyperprior(2).unwrap();
        assert!((h.a_lambda - 5.0).abs() < 1e-12);
        assert!(RunConfig::from_toml("iteratons = 5").is_err());
        assert!(RunConfig::from_toml("lambda0 = 5").unwrap().hyperprior(2).is_err());
    }

    #[test]
    fn auto_base_measure() {
        let d = GroupedDataset::from_scalars(vec![vec![0.0, 2.0], vec![4.0]]).unwrap();
        let b = RunConfig::default().base_measure(&d).unwrap();
        assert_eq!(b.mu0, 2.0);
        assert_eq!(b.k0, 1.0 / 16.0);
        assert_eq!(b.nu0, 4.0);
        assert_eq!(b.sigma0_sq, 0.5);
    }
}
