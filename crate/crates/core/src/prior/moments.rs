use super::{prior_k_pmf, VecFdpParams};
use crate::error::{HmfmError, Result};
use crate::quadrature::integrate;

/// `I(γ, Λ) = ∫_0^1 (1 + Λx) e^{-Λ(1-x)} (1 - x^{1/γ}) dx`.
pub fn tie_integral(gamma: f64, lambda: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma.is_finite() && lambda > 0.0 && lambda.is_finite()) {
        return Err(HmfmError::domain(format!(
            "need gamma > 0 and lambda > 0, got ({gamma}, {lambda})"
        )));
    }
    let f = |x: f64| {
        if x <= 0.0 {
            return (-lambda).exp();
        }
        let tail = -(x.ln() / gamma).exp_m1();
        (1.0 + lambda * x) * (-lambda * (1.0 - x)).exp() * tail
    };
    // x^{1/γ} has a boundary layer of width ~γ at 1 and ~e^{-1/γ} at 0
    let split = (1.0 - 10.0 * gamma).clamp(0.5, 1.0 - 1e-12);
    let a = integrate(f, 0.0, split, 1e-300, 1e-12)?;
    let b = integrate(f, split, 1.0, 1e-300, 1e-12)?;
    Ok(a.value + b.value)
}

/// Probability that two observations of the same group share a cluster:
/// `(γ+1) I(γ, Λ)`, equal to `Var(P_j(A)) / (P_0(A)(1-P_0(A)))`.
pub fn local_tie_probability(gamma: f64, lambda: f64) -> Result<f64> {
    Ok((gamma + 1.0) * tie_integral(gamma, lambda)?)
}

// P(K_(1,1) = 1) = E[1/M]
fn cross_tie_probability(lambda: f64) -> f64 {
    -(-lambda).exp_m1() / lambda
}

/// `corr(P_j(A), P_l(A))`, the same for every set `A`:
/// `(1 - e^{-Λ}) / (Λ sqrt((γ_j+1)(γ_l+1) I(γ_j,Λ) I(γ_l,Λ)))`.
pub fn correlation(params: &VecFdpParams, j: usize, l: usize) -> Result<f64> {
    if j == l {
        return Err(HmfmError::domain("correlation needs two distinct groups"));
    }
    let pair = params.pair(j, l)?;
    let lambda = pair.lambda();
    let pj = local_tie_probability(pair.gamma()[0], lambda)?;
    let pl = local_tie_probability(pair.gamma()[1], lambda)?;
    Ok(cross_tie_probability(lambda) / (pj * pl).sqrt())
}

/// `Cov(P_j(A), P_l(B))`. Across groups this is
/// `P(K_(1,1)=1) (P_0(A∩B) - P_0(A)P_0(B))`; within a group the tie
/// probability of two draws from the same measure replaces `P(K_(1,1)=1)`.
pub fn covariance(
    params: &VecFdpParams,
    j: usize,
    l: usize,
    p0_a: f64,
    p0_b: f64,
    p0_ab: f64,
) -> Result<f64> {
    for p in [p0_a, p0_b, p0_ab] {
        check_prob(p)?;
    }
    if p0_ab > p0_a.min(p0_b) + 1e-15 {
        return Err(HmfmError::domain("P0(A∩B) exceeds P0(A) or P0(B)"));
    }
    let pair = params.pair(j, l)?;
    let tie = if j == l {
        local_tie_probability(pair.gamma()[0], pair.lambda())?
    } else {
        cross_tie_probability(pair.lambda())
    };
    Ok(tie * (p0_ab - p0_a * p0_b))
}

fn check_prob(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(HmfmError::domain(format!("probability out of [0, 1]: {p}")))
    }
}

/// `E[P_1(A)^{n_j} P_2(A)^{n_l}] = Σ_k P_0(A)^k P(K_(n_j,n_l) = k)` for
/// two-group parameters.
pub fn mixed_moment(n_j: usize, n_l: usize, p0_a: f64, params: &VecFdpParams) -> Result<f64> {
    check_prob(p0_a)?;
    if params.d() != 2 {
        return Err(HmfmError::dimension(format!(
            "mixed moments need two-group parameters, got d = {}",
            params.d()
        )));
    }
    if n_j + n_l == 0 {
        return Ok(1.0);
    }
    let pmf = prior_k_pmf(&[n_j, n_l], params)?;
    Ok(pmf
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, p)| p0_a.powi(k as i32) * p)
        .sum())
}

/// Coskewness `E[(X-p)^2 (Y-p)] / (σ_X^2 σ_Y)` of `X = P_1(A)` and
/// `Y = P_2(A)` with `p = P_0(A)`, from the mixed moments of order up to 3.
pub fn coskewness(params: &VecFdpParams, p0_a: f64) -> Result<f64> {
    if !(p0_a > 0.0 && p0_a < 1.0) {
        return Err(HmfmError::domain(format!("P0(A) must lie in (0, 1), got {p0_a}")));
    }
    let p = p0_a;
    let e_x2y = mixed_moment(2, 1, p, params)?;
    let e_xy = mixed_moment(1, 1, p, params)?;
    let e_x2 = mixed_moment(2, 0, p, params)?;
    let e_y2 = mixed_moment(0, 2, p, params)?;
    let var_x = e_x2 - p * p;
    let var_y = e_y2 - p * p;
    let num = e_x2y - 2.0 * p * e_xy - p * e_x2 + 2.0 * p.powi(3);
    Ok(num / (var_x * var_y.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prior::prior_k;
    use crate::special::ln_factorial;

    // E[(γ+1)/(γM+1)] summed over the shifted Poisson law of M.
    fn tie_series(gamma: f64, lambda: f64) -> f64 {
        let mut s = 0.0;
        for m in 1..2000usize {
            let log_q = -lambda + (m as f64 - 1.0) * lambda.ln() - ln_factorial(m - 1);
            s += log_q.exp() * (gamma + 1.0) / (gamma * m as f64 + 1.0);
        }
        s
    }

    #[test]
    fn tie_probability_matches_series() {
        for &g in &[1e-3, 0.1, 1.0, 7.0, 300.0] {
            for &lambda in &[0.2, 2.0, 15.0] {
                let a = local_tie_probability(g, lambda).unwrap();
                let b = tie_series(g, lambda);
                assert!((a - b).abs() < 1e-9, "γ={g} Λ={lambda}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn tie_probability_matches_prior_k() {
        let p = VecFdpParams::new(3.0, vec![0.4]).unwrap();
        let a = local_tie_probability(0.4, 3.0).unwrap();
        let b = prior_k(&[2], &p, 1).unwrap();
        assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn correlation_limits() {
        let small = VecFdpParams::new(1.0, vec![1e-6, 1e-6]).unwrap();
        let c = correlation(&small, 0, 1).unwrap();
        assert!((c - 0.6321).abs() < 1e-3, "{c}");
        let large = VecFdpParams::new(5.0, vec![1e4, 1e4]).unwrap();
        let c = correlation(&large, 0, 1).unwrap();
        assert!((c - 1.0).abs() < 1e-3, "{c}");
    }

    #[test]
    fn correlation_from_cluster_probabilities() {
        // corr = P(K_(1,1)=1) / sqrt(P(K_(2)=1) P(K_(2)=1)) in terms of prior_k
        let p = VecFdpParams::new(2.0, vec![0.5, 3.0]).unwrap();
        let p11 = prior_k(&[1, 1], &p, 1).unwrap();
        let pj = prior_k(&[2, 0], &p, 1).unwrap();
        let pl = prior_k(&[0, 2], &p, 1).unwrap();
        let c = correlation(&p, 0, 1).unwrap();
        assert!((c - p11 / (pj * pl).sqrt()).abs() < 1e-10);
        assert!(c > 0.0 && c <= 1.0);
    }

    #[test]
    fn mixed_moment_examples() {
        let p = VecFdpParams::new(1.0, vec![1.0, 1.0]).unwrap();
        assert!((mixed_moment(1, 0, 0.3, &p).unwrap() - 0.3).abs() < 1e-12);
        let k1 = prior_k(&[1, 1], &p, 1).unwrap();
        let k2 = prior_k(&[1, 1], &p, 2).unwrap();
        let m = mixed_moment(1, 1, 0.5, &p).unwrap();
        assert!((m - (0.5 * k1 + 0.25 * k2)).abs() < 1e-12);
    }

    #[test]
    fn covariance_agrees_with_mixed_moments() {
        let p = VecFdpParams::new(2.0, vec![1.0, 0.3]).unwrap();
        let a = 0.35;
        let cov = covariance(&p, 0, 1, a, a, a).unwrap();
        let mm = mixed_moment(1, 1, a, &p).unwrap() - a * a;
        assert!((cov - mm).abs() < 1e-10);
        let var = covariance(&p, 1, 1, a, a, a).unwrap();
        let mm = mixed_moment(0, 2, a, &p).unwrap() - a * a;
        assert!((var - mm).abs() < 1e-10);
    }

    #[test]
    fn coskewness_vanishes_for_a_single_shared_atom() {
        let p = VecFdpParams::new(1e-8, vec![1.0, 1.0]).unwrap();
        assert!(coskewness(&p, 0.5).unwrap().abs() < 1e-6);
        // away from 1/2 the limit is the skewness of a Bernoulli(p)
        let q: f64 = 0.2;
        let expected = (1.0 - 2.0 * q) / (q * (1.0 - q)).sqrt();
        assert!((coskewness(&p, q).unwrap() - expected).abs() < 1e-5);
    }

    #[test]
    fn argument_checks() {
        let p = VecFdpParams::new(1.0, vec![1.0, 1.0]).unwrap();
        assert!(correlation(&p, 0, 0).is_err());
        assert!(correlation(&p, 0, 2).is_err());
        assert!(coskewness(&p, 0.0).is_err());
        assert!(mixed_moment(1, 1, 1.5, &p).is_err());
        assert!(tie_integral(0.0, 1.0).is_err());
    }
}
