use super::VecFdpParams;
use crate::error::{HmfmError, Result};
use crate::special::ln_gamma;

fn check_u(u: f64) -> Result<()> {
    if u >= 0.0 && u.is_finite() {
        Ok(())
    } else {
        Err(HmfmError::domain(format!("u must be a finite non-negative number, got {u}")))
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(HmfmError::domain(format!("gamma must be positive, got {gamma}")))
    }
}

/// Laplace transform of `Gamma(γ, 1)`: `ψ(u) = (1+u)^{-γ}`.
pub fn psi(u: f64, gamma: f64) -> Result<f64> {
    check_u(u)?;
    check_gamma(gamma)?;
    Ok((-gamma * u.ln_1p()).exp())
}

/// `log ∫ e^{-us} s^n Gamma(ds; γ, 1) = log Γ(n+γ)/Γ(γ) - (n+γ) log(1+u)`.
pub fn log_kappa(u: f64, n: usize, gamma: f64) -> Result<f64> {
    check_u(u)?;
    check_gamma(gamma)?;
    let n = n as f64;
    let poch = if n == 0.0 {
        0.0
    } else {
        ln_gamma(n + gamma) - ln_gamma(gamma)
    };
    Ok(poch - (n + gamma) * u.ln_1p())
}

/// Product `∏_j ψ_j(u_j)` without argument checks.
#[inline]
pub fn psi_bar(u: &[f64], gamma: &[f64]) -> f64 {
    let s: f64 = u.iter().zip(gamma).map(|(u, g)| g * u.ln_1p()).sum();
    (-s).exp()
}

/// `log Ψ(k, u) = (k-1) log Λ + log(k + Λψ̄) - Λ(1-ψ̄)` with `ψ̄ = ∏_j ψ_j(u_j)`.
pub fn log_psi_big(k: usize, u: &[f64], params: &VecFdpParams) -> Result<f64> {
    if u.len() != params.d() {
        return Err(HmfmError::dimension(format!(
            "u has {} entries, expected {}",
            u.len(),
            params.d()
        )));
    }
    for &x in u {
        check_u(x)?;
    }
    Ok(log_psi_big_unchecked(k, psi_bar(u, params.gamma()), params.lambda()))
}

#[inline]
pub(crate) fn log_psi_big_unchecked(k: usize, psi_bar: f64, lambda: f64) -> f64 {
    let k = k as f64;
    (k - 1.0) * lambda.ln() + (k + lambda * psi_bar).ln() - lambda * (1.0 - psi_bar)
}
