//! Distributional calculus of the vector of finite Dirichlet processes.
//!
//! `d` random probability measures share a random number `M ~ 1 + Poisson(Λ)`
//! of atoms drawn from a base measure; group `j` weighs them with independent
//! `Gamma(γ_j, 1)` jumps, so each normalized weight vector is a symmetric
//! Dirichlet. Everything here is a pure function of the parameters: Laplace
//! kernels, the partially exchangeable partition probability function, the
//! prior on the global number of clusters, moments and dependence measures,
//! hyperparameter elicitation and forward simulation.

mod elicit;
mod gfc;
mod kernels;
mod moments;
mod number_of_clusters;
mod peppf;
mod simulate;

pub use elicit::elicit;
pub use gfc::GfcTable;
pub use kernels::{log_kappa, log_psi_big, psi, psi_bar};
pub use moments::{
    coskewness, correlation, covariance, local_tie_probability, mixed_moment, tie_integral,
};
pub use number_of_clusters::{log_v_series, prior_k, prior_k_pmf, prior_k_with, SeriesControl};
pub use peppf::{log_peppf, log_v, VIntegral, VMethod};
pub use simulate::{prior_simulate, PriorRealization};

use crate::error::{HmfmError, Result};

/// Parameters `(Λ, γ_1..γ_d)` of the vector prior. `d` is the number of groups.
#[derive(Debug, Clone, PartialEq)]
pub struct VecFdpParams {
    lambda: f64,
    gamma: Vec<f64>,
}

impl VecFdpParams {
    pub fn new(lambda: f64, gamma: Vec<f64>) -> Result<Self> {
        if gamma.is_empty() {
            return Err(HmfmError::domain("at least one group is required"));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(HmfmError::domain(format!("lambda must be positive, got {lambda}")));
        }
        if let Some(g) = gamma.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
            return Err(HmfmError::domain(format!("gamma entries must be positive, got {g}")));
        }
        Ok(VecFdpParams { lambda, gamma })
    }

    /// Same `γ` in all `d` groups.
    pub fn symmetric(lambda: f64, gamma: f64, d: usize) -> Result<Self> {
        Self::new(lambda, vec![gamma; d])
    }

    pub fn d(&self) -> usize {
        self.gamma.len()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    /// The two-group prior of groups `j` and `l`.
    pub fn pair(&self, j: usize, l: usize) -> Result<Self> {
        let d = self.d();
        if j >= d || l >= d {
            return Err(HmfmError::dimension(format!(
                "group indices ({j}, {l}) out of range for d = {d}"
            )));
        }
        Ok(VecFdpParams {
            lambda: self.lambda,
            gamma: vec![self.gamma[j], self.gamma[l]],
        })
    }
}

/// Hyperprior `γ_j | Λ ~ Gamma(a_γ, Λ b_γ)`, `Λ ~ Gamma(a_Λ, b_Λ)` (shape, rate).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct HyperPriorParams {
    pub a_gamma: f64,
    pub b_gamma: f64,
    pub a_lambda: f64,
    pub b_lambda: f64,
}

impl HyperPriorParams {
    pub fn new(a_gamma: f64, b_gamma: f64, a_lambda: f64, b_lambda: f64) -> Result<Self> {
        let h = HyperPriorParams {
            a_gamma,
            b_gamma,
            a_lambda,
            b_lambda,
        };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("a_gamma", self.a_gamma),
            ("b_gamma", self.b_gamma),
            ("a_lambda", self.a_lambda),
            ("b_lambda", self.b_lambda),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(HmfmError::domain(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Prior mean of `Λ`.
    pub fn lambda_mean(&self) -> f64 {
        self.a_lambda / self.b_lambda
    }
}

/// Interpretable reparametrization of the hyperprior: prior mean and variance
/// of `Λ` and a common guess for the `γ_j`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ElicitationSpec {
    pub lambda0: f64,
    pub v_lambda: f64,
    pub gamma0: f64,
    pub d: usize,
}

/// Per-group counts `n_{j,k}` of a global partition into `K` clusters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupCounts {
    counts: Vec<Vec<usize>>,
}

impl GroupCounts {
    /// `counts[j][k]` is the number of observations of group `j` in cluster `k`.
    pub fn new(counts: Vec<Vec<usize>>) -> Result<Self> {
        let d = counts.len();
        if d == 0 {
            return Err(HmfmError::dimension("no groups"));
        }
        let k = counts[0].len();
        if counts.iter().any(|row| row.len() != k) {
            return Err(HmfmError::dimension("ragged count matrix"));
        }
        for c in 0..k {
            if counts.iter().all(|row| row[c] == 0) {
                return Err(HmfmError::domain(format!("cluster {c} is empty in every group")));
            }
        }
        Ok(GroupCounts { counts })
    }

    pub fn k(&self) -> usize {
        self.counts[0].len()
    }

    pub fn d(&self) -> usize {
        self.counts.len()
    }

    pub fn row(&self, j: usize) -> &[usize] {
        &self.counts[j]
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        self.counts.iter().map(|row| row.iter().sum()).collect()
    }
}
