use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use super::Observation;
use crate::error::{HmfmError, Result};
use crate::special::ln_gamma;

/// Normal-Inverse-Gamma prior on `(μ, σ²)`:
/// `1/σ² ~ Gamma(ν₀/2, rate ν₀σ₀²/2)`, `μ | σ² ~ N(μ₀, σ²/k₀)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NigParams {
    pub mu0: f64,
    pub k0: f64,
    pub nu0: f64,
    pub sigma0_sq: f64,
}

impl NigParams {
    pub fn new(mu0: f64, k0: f64, nu0: f64, sigma0_sq: f64) -> Result<Self> {
        let p = NigParams {
            mu0,
            k0,
            nu0,
            sigma0_sq,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mu0.is_finite() {
            return Err(HmfmError::domain("mu0 must be finite"));
        }
        for (name, v) in [("k0", self.k0), ("nu0", self.nu0), ("sigma0_sq", self.sigma0_sq)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(HmfmError::domain(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Predictive law of one new response: Student-t with `ν` degrees of
    /// freedom, location `μ` and squared scale `σ²(1 + 1/k)`.
    pub fn predictive(&self) -> StudentT {
        StudentT {
            df: self.nu0,
            loc: self.mu0,
            scale: (self.sigma0_sq * (1.0 + 1.0 / self.k0)).sqrt(),
        }
    }
}

/// Location-scale Student-t distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudentT {
    pub df: f64,
    pub loc: f64,
    pub scale: f64,
}

impl StudentT {
    pub fn ln_pdf(&self, y: f64) -> f64 {
        let z = (y - self.loc) / self.scale;
        let v = self.df;
        ln_gamma(0.5 * (v + 1.0)) - ln_gamma(0.5 * v)
            - 0.5 * (v * std::f64::consts::PI).ln()
            - self.scale.ln()
            - 0.5 * (v + 1.0) * (z * z / v).ln_1p()
    }

    pub fn pdf(&self, y: f64) -> f64 {
        self.ln_pdf(y).exp()
    }
}

/// Running count, sum and sum of squares of the responses in a cluster.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ClusterSuffStats {
    pub count: usize,
    pub sum: f64,
    pub sum_sq: f64,
}

impl ClusterSuffStats {
    pub fn from_values(ys: &[f64]) -> Self {
        let mut s = Self::default();
        for &y in ys {
            s.add(y);
        }
        s
    }

    pub fn add(&mut self, y: f64) {
        self.count += 1;
        self.sum += y;
        self.sum_sq += y * y;
    }

    pub fn remove(&mut self, y: f64) {
        debug_assert!(self.count > 0, "removing from empty stats");
        self.count -= 1;
        self.sum -= y;
        self.sum_sq -= y * y;
        if self.count == 0 {
            self.sum = 0.0;
            self.sum_sq = 0.0;
        }
    }

    /// Adds every mark of `obs`.
    pub fn add_obs(&mut self, obs: &Observation) {
        for &y in &obs.marks {
            self.add(y);
        }
    }

    pub fn remove_obs(&mut self, obs: &Observation) {
        for &y in &obs.marks {
            self.remove(y);
        }
    }

    pub fn merge(&mut self, other: &ClusterSuffStats) {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum / self.count as f64
        }
    }

    /// Centred sum of squares `Σ(y - ȳ)²`, clamped at zero.
    pub fn centred_ss(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.sum_sq - self.sum * self.sum / self.count as f64).max(0.0)
        }
    }
}

/// Conjugate update of the prior with the data summarized by `stats`.
pub fn nig_posterior(stats: &ClusterSuffStats, prior: &NigParams) -> NigParams {
    if stats.count == 0 {
        return *prior;
    }
    let n = stats.count as f64;
    let ybar = stats.mean();
    let kn = prior.k0 + n;
    let nun = prior.nu0 + n;
    let dev = ybar - prior.mu0;
    let ss = prior.nu0 * prior.sigma0_sq + stats.centred_ss() + prior.k0 * n * dev * dev / kn;
    NigParams {
        mu0: (prior.k0 * prior.mu0 + stats.sum) / kn,
        k0: kn,
        nu0: nun,
        sigma0_sq: ss / nun,
    }
}

/// `log ∫ ∏ N(y_i | μ, σ²) dNIG(μ, σ²)` for the responses summarized by `stats`.
pub fn log_marginal(stats: &ClusterSuffStats, prior: &NigParams) -> f64 {
    if stats.count == 0 {
        return 0.0;
    }
    let post = nig_posterior(stats, prior);
    let n = stats.count as f64;
    -0.5 * n * std::f64::consts::PI.ln() + ln_gamma(0.5 * post.nu0) - ln_gamma(0.5 * prior.nu0)
        + 0.5 * (prior.k0 / post.k0).ln()
        + 0.5 * prior.nu0 * (prior.nu0 * prior.sigma0_sq).ln()
        - 0.5 * post.nu0 * (post.nu0 * post.sigma0_sq).ln()
}

/// Draws `(μ, σ²)` from the NIG law `post`.
pub fn nig_draw<R: Rng + ?Sized>(post: &NigParams, rng: &mut R) -> (f64, f64) {
    let shape = 0.5 * post.nu0;
    let rate = 0.5 * post.nu0 * post.sigma0_sq;
    let precision = Gamma::new(shape, 1.0 / rate)
        .expect("valid NIG parameters")
        .sample(rng)
        .max(f64::MIN_POSITIVE);
    let sigma_sq = 1.0 / precision;
    let z: f64 = StandardNormal.sample(rng);
    (post.mu0 + z * (sigma_sq / post.k0).sqrt(), sigma_sq)
}
