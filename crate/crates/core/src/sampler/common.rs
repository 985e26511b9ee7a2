use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{HmfmError, Result};
use crate::likelihood::{GroupedDataset, NigParams, RegressionSpec};
use crate::prior::HyperPriorParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Conditional,
    Marginal,
}

impl std::str::FromStr for Algorithm {
    type Err = HmfmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "conditional" => Ok(Algorithm::Conditional),
            "marginal" => Ok(Algorithm::Marginal),
            other => Err(HmfmError::Config(format!("unknown algorithm '{other}'"))),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Algorithm::Conditional => "conditional",
            Algorithm::Marginal => "marginal",
        })
    }
}

/// Starting partition of a chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum InitPartition {
    OneCluster,
    KMeans { centers: usize },
}

/// Target acceptance rates of the adaptive Metropolis steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptTargets {
    pub m_star: f64,
    pub gamma: f64,
    pub mala: f64,
}

impl Default for AdaptTargets {
    fn default() -> Self {
        AdaptTargets {
            m_star: 0.44,
            gamma: 0.44,
            mala: 0.574,
        }
    }
}

/// Run-length, seeding and validation switches shared by both samplers.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    /// Total sweeps, burn-in included.
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    /// Replace every likelihood term by a constant.
    pub prior_only: bool,
    pub init: InitPartition,
    pub fix_lambda: bool,
    pub fix_gamma: bool,
    /// Largest number of non-allocated components the conditional sampler proposes.
    pub m_star_cap: usize,
    pub targets: AdaptTargets,
    /// Keep per-iteration component or cluster summaries (needed for densities).
    pub record_components: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            iterations: 2_000,
            burn_in: 1_000,
            thin: 1,
            seed: 1,
            prior_only: false,
            init: InitPartition::KMeans { centers: 10 },
            fix_lambda: false,
            fix_gamma: false,
            m_star_cap: 10_000,
            targets: AdaptTargets::default(),
            record_components: true,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.iterations {
            return Err(HmfmError::Config(format!(
                "burn-in ({}) must be smaller than the number of iterations ({})",
                self.burn_in, self.iterations
            )));
        }
        if self.thin == 0 {
            return Err(HmfmError::Config("thin must be at least 1".into()));
        }
        if let InitPartition::KMeans { centers: 0 } = self.init {
            return Err(HmfmError::Config("k-means initialization needs at least one center".into()));
        }
        Ok(())
    }

    pub(crate) fn keeps(&self, iter: usize) -> bool {
        iter >= self.burn_in && (iter - self.burn_in) % self.thin == 0
    }
}

/// Base measure, hyperprior and optional regression prior of the model.
#[derive(Debug, Clone)]
pub struct ModelPriors {
    pub base: NigParams,
    pub hyper: HyperPriorParams,
    /// Starting (or, with `fix_lambda`, fixed) value of Λ; defaults to its prior mean.
    pub lambda_init: Option<f64>,
    /// Starting (or fixed) values of the γ_j; default to `a_γ / (b_γ Λ)`.
    pub gamma_init: Option<Vec<f64>>,
    pub regression: Option<RegressionSpec>,
}

impl ModelPriors {
    pub fn new(base: NigParams, hyper: HyperPriorParams) -> Self {
        ModelPriors {
            base,
            hyper,
            lambda_init: None,
            gamma_init: None,
            regression: None,
        }
    }

    pub(crate) fn initial_values(&self, d: usize) -> Result<(f64, Vec<f64>)> {
        self.base.validate()?;
        self.hyper.validate()?;
        let lambda = self.lambda_init.unwrap_or_else(|| self.hyper.lambda_mean());
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(HmfmError::Config(format!("initial lambda must be positive, got {lambda}")));
        }
        let gamma = match &self.gamma_init {
            Some(g) if g.len() != d => {
                return Err(HmfmError::Config(format!(
                    "{} initial gamma values for {d} groups",
                    g.len()
                )))
            }
            Some(g) => g.clone(),
            None => vec![self.hyper.a_gamma / (self.hyper.b_gamma * lambda); d],
        };
        if gamma.iter().any(|g| !(*g > 0.0 && g.is_finite())) {
            return Err(HmfmError::Config("initial gamma values must be positive".into()));
        }
        Ok((lambda, gamma))
    }
}

/// Diminishing Robbins–Monro adaptation of a log step size.
#[derive(Debug, Clone)]
pub struct RobbinsMonro {
    pub log_scale: f64,
    target: f64,
    t: usize,
    frozen: bool,
}

impl RobbinsMonro {
    pub fn new(scale: f64, target: f64) -> Self {
        RobbinsMonro {
            log_scale: scale.ln(),
            target,
            t: 0,
            frozen: false,
        }
    }

    pub fn scale(&self) -> f64 {
        self.log_scale.exp()
    }

    /// Moves the log scale by `t^{-0.7} (α - target)`.
    pub fn update(&mut self, accept_prob: f64) {
        if self.frozen {
            return;
        }
        self.t += 1;
        let step = (self.t as f64).powf(-0.7);
        self.log_scale = (self.log_scale + step * (accept_prob.min(1.0) - self.target)).clamp(-30.0, 10.0);
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }
}

/// Acceptance counter for reporting.
#[derive(Debug, Clone, Default)]
pub(crate) struct Rate {
    accepted: usize,
    tried: usize,
}

impl Rate {
    pub fn record(&mut self, accepted: bool) {
        self.tried += 1;
        self.accepted += accepted as usize;
    }

    pub fn value(&self) -> f64 {
        if self.tried == 0 {
            f64::NAN
        } else {
            self.accepted as f64 / self.tried as f64
        }
    }

    pub fn reset(&mut self) {
        *self = Rate::default();
    }
}

/// `log G` with `G ~ Gamma(shape, 1)`, accurate for tiny shapes where `G`
/// itself underflows.
pub fn sample_log_gamma<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    if shape < 1.0 {
        // G = G' U^{1/shape} with G' ~ Gamma(shape + 1)
        let g = Gamma::new(shape + 1.0, 1.0).expect("positive shape").sample(rng);
        let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
        g.ln() + u.ln() / shape
    } else {
        Gamma::new(shape, 1.0).expect("positive shape").sample(rng).ln()
    }
}

/// Draws Λ from its full conditional given `K`, `ψ̄(u)` and the γ's:
/// a two-component mixture of `Gamma(a*+K-1, r)` and `Gamma(a*+K, r)`,
/// `r = b* + 1 - ψ̄`. The hyperprior of γ enters through
/// `a* = a_Λ + d a_γ`, `b* = b_Λ + b_γ Σγ_j` unless γ is held fixed.
pub fn sample_lambda<R: Rng + ?Sized>(
    k: usize,
    psi_bar: f64,
    gamma: &[f64],
    hyper: &HyperPriorParams,
    gamma_random: bool,
    rng: &mut R,
) -> f64 {
    let (a, b) = if gamma_random {
        (
            hyper.a_lambda + gamma.len() as f64 * hyper.a_gamma,
            hyper.b_lambda + hyper.b_gamma * gamma.iter().sum::<f64>(),
        )
    } else {
        (hyper.a_lambda, hyper.b_lambda)
    };
    let kf = k as f64;
    let rate = b + 1.0 - psi_bar;
    let w1 = kf * rate / (kf * (b + 1.0) + (a - 1.0) * psi_bar);
    let shape = if rng.random::<f64>() < w1 {
        a + kf - 1.0
    } else {
        a + kf
    };
    let g = Gamma::new(shape, 1.0 / rate).expect("positive shape and rate");
    g.sample(rng).max(f64::MIN_POSITIVE)
}

/// One retained component of the conditional sampler.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentRecord {
    pub mu: f64,
    pub sigma2: f64,
    /// Unnormalized weights `S_{j,m}`, one per group.
    pub s: Vec<f64>,
}

/// One retained cluster of the marginal sampler.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterRecord {
    pub counts: Vec<usize>,
    /// Posterior of the cluster's `(μ, σ²)` given its members.
    pub posterior: NigParams,
}

/// State summary stored for one retained iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub k: usize,
    /// Number of components (conditional sampler only).
    pub m: Option<usize>,
    pub lambda: f64,
    pub gamma: Vec<f64>,
    pub u: Vec<f64>,
    /// Cluster labels `0..k` per group and observation.
    pub allocations: Vec<Vec<usize>>,
    /// Conditional sampler: all `M` components, allocated ones first.
    pub components: Vec<ComponentRecord>,
    /// Marginal sampler: the `k` clusters in label order.
    pub clusters: Vec<ClusterRecord>,
    pub beta: Option<Vec<Vec<f64>>>,
}

/// Retained draws of one chain.
#[derive(Debug, Clone)]
pub struct ChainOutput {
    pub algorithm: Algorithm,
    pub group_sizes: Vec<usize>,
    pub base: NigParams,
    pub records: Vec<IterationRecord>,
    /// Post-burn-in acceptance rates of the Metropolis steps.
    pub acceptance: Vec<(String, f64)>,
}

impl ChainOutput {
    /// Trace of the number of clusters.
    pub fn k_trace(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.k).collect()
    }

    /// Empirical pmf of `K` over the retained iterations, indexed by `K`.
    pub fn k_pmf(&self, k_max: usize) -> Vec<f64> {
        let mut pmf = vec![0.0; k_max + 1];
        let n = self.records.len() as f64;
        for r in &self.records {
            if r.k <= k_max {
                pmf[r.k] += 1.0 / n;
            }
        }
        pmf
    }
}

pub(crate) fn check_data(data: &GroupedDataset, config: &SamplerConfig, priors: &ModelPriors) -> Result<()> {
    config.validate()?;
    if data.n_total() == 0 {
        return Err(HmfmError::data(None, "dataset has no observations"));
    }
    if !config.prior_only {
        if let Some(j) = data.group_sizes().iter().position(|&n| n == 0) {
            return Err(HmfmError::data(None, format!("group {} is empty", j + 1)));
        }
    }
    match (&priors.regression, data.has_covariates()) {
        (Some(spec), true) if spec.r() != data.r() => Err(HmfmError::dimension(format!(
            "regression prior has {} coefficients, data have {} covariates",
            spec.r(),
            data.r()
        ))),
        (Some(_), false) => Err(HmfmError::Config("regression variant needs covariates".into())),
        _ => Ok(()),
    }
}

/// Initial labels (contiguous from 0) for every observation.
pub(crate) fn initial_partition<R: Rng + ?Sized>(
    data: &GroupedDataset,
    config: &SamplerConfig,
    rng: &mut R,
) -> Vec<Vec<usize>> {
    let sizes = data.group_sizes();
    match config.init {
        InitPartition::KMeans { centers } if !config.prior_only => {
            let means: Vec<f64> = data.groups().iter().flatten().map(|o| o.mean()).collect();
            let flat = super::kmeans_1d(&means, centers, rng);
            let mut out = Vec::with_capacity(sizes.len());
            let mut pos = 0;
            for n in sizes {
                out.push(flat[pos..pos + n].to_vec());
                pos += n;
            }
            out
        }
        _ => sizes.iter().map(|&n| vec![0; n]).collect(),
    }
}
