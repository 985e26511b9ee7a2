use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::kernels::log_psi_big_unchecked;
use super::{GroupCounts, VecFdpParams};
use crate::error::{HmfmError, Result};
use crate::quadrature::GradedRule;
use crate::special::{ln_gamma, ln_pochhammer, log_sum_exp};

/// How [`log_v`] evaluated the integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VMethod {
    TensorGaussLegendre,
    MonteCarlo,
}

/// Value of `log V(K; γ, Λ)` with an estimate of its relative error
/// (a refinement difference for quadrature, a standard error for Monte Carlo).
#[derive(Debug, Clone, Copy)]
pub struct VIntegral {
    pub log_value: f64,
    pub rel_error: f64,
    pub method: VMethod,
}

const QUAD_TOL: f64 = 1e-8;
const MC_SAMPLES: usize = 200_000;
const MC_SEED: u64 = 0x5eed_f00d;

/// Per-group factor of the integrand after the change of variables
/// `x_j = (1+u_j)^{-γ_j}`:
/// `(1 - x^{1/γ})^{n-1} x^{K-1} / (γ Γ(n))`, returned in log form.
fn log_group_factor(x: f64, k: usize, n: usize, gamma: f64) -> f64 {
    let lx = x.ln();
    let one_minus = -(lx / gamma).exp_m1();
    (n as f64 - 1.0) * one_minus.ln() + (k as f64 - 1.0) * lx - gamma.ln() - ln_gamma(n as f64)
}

/// `log V(K; γ, Λ)`, the integral over `u ∈ (0,∞)^d` of
/// `Ψ(K,u) ∏_j u_j^{n_j-1}/Γ(n_j) (1+u_j)^{-(n_j + Kγ_j)}`.
///
/// Groups with `n_j = 0` drop out. Up to three active groups are integrated by
/// tensor Gauss–Legendre on `(0,1)^d` with refinement until two successive
/// grids agree to `1e-8`; more groups fall back to importance sampling with a
/// fixed internal seed.
pub fn log_v(k: usize, n: &[usize], params: &VecFdpParams) -> Result<VIntegral> {
    if n.len() != params.d() {
        return Err(HmfmError::dimension(format!(
            "{} group sizes for d = {}",
            n.len(),
            params.d()
        )));
    }
    if k == 0 {
        return Err(HmfmError::domain("K must be at least 1"));
    }
    let active: Vec<(usize, f64)> = n
        .iter()
        .zip(params.gamma())
        .filter(|(n, _)| **n > 0)
        .map(|(n, g)| (*n, *g))
        .collect();
    let lambda = params.lambda();
    match active.len() {
        0 => Ok(VIntegral {
            log_value: log_psi_big_unchecked(k, 1.0, lambda),
            rel_error: 0.0,
            method: VMethod::TensorGaussLegendre,
        }),
        1..=3 => tensor_quadrature(k, &active, lambda),
        _ => monte_carlo(k, &active, lambda),
    }
}

fn tensor_quadrature(k: usize, active: &[(usize, f64)], lambda: f64) -> Result<VIntegral> {
    // 8-point panels, 128 nodes first, then deeper grading towards the
    // algebraic endpoint singularities.
    let schedule = [(8, 7), (8, 12), (8, 18), (12, 26)];
    let mut previous: Option<f64> = None;
    let mut last_err = f64::INFINITY;
    let max_level = if active.len() == 3 { 3 } else { schedule.len() };
    for &(points, levels) in &schedule[..max_level] {
        let rule = GradedRule::new(points, levels);
        let value = tensor_sum(k, active, lambda, &rule);
        if let Some(prev) = previous {
            last_err = (value - prev).exp_m1().abs();
            if last_err <= QUAD_TOL {
                return Ok(VIntegral {
                    log_value: value,
                    rel_error: last_err,
                    method: VMethod::TensorGaussLegendre,
                });
            }
        }
        previous = Some(value);
    }
    Err(HmfmError::Quadrature {
        rel_error: last_err,
        tolerance: QUAD_TOL,
    })
}

fn tensor_sum(k: usize, active: &[(usize, f64)], lambda: f64, rule: &GradedRule) -> f64 {
    // per-dimension tables of log x and log(weight * factor)
    let tables: Vec<(Vec<f64>, Vec<f64>)> = active
        .iter()
        .map(|&(n, g)| {
            let lx: Vec<f64> = rule.nodes.iter().map(|x| x.ln()).collect();
            let lf: Vec<f64> = rule
                .nodes
                .iter()
                .zip(&rule.weights)
                .map(|(x, w)| w.ln() + log_group_factor(*x, k, n, g))
                .collect();
            (lx, lf)
        })
        .collect();
    let m = rule.len();
    let dims = active.len();
    let total = m.pow(dims as u32);
    let mut terms = Vec::with_capacity(total);
    let mut idx = vec![0usize; dims];
    for _ in 0..total {
        let mut log_psi_bar = 0.0;
        let mut log_w = 0.0;
        for (d, &i) in idx.iter().enumerate() {
            log_psi_bar += tables[d].0[i];
            log_w += tables[d].1[i];
        }
        let t = log_w + log_psi_big_unchecked(k, log_psi_bar.exp(), lambda);
        if t.is_finite() {
            terms.push(t);
        }
        for slot in idx.iter_mut() {
            *slot += 1;
            if *slot < m {
                break;
            }
            *slot = 0;
        }
    }
    log_sum_exp(&terms)
}

// Importance density: x_j ~ Beta(K, 1), i.e. K x^{K-1} on (0,1).
fn monte_carlo(k: usize, active: &[(usize, f64)], lambda: f64) -> Result<VIntegral> {
    let mut rng = ChaCha8Rng::seed_from_u64(MC_SEED);
    let kf = k as f64;
    let mut logs = Vec::with_capacity(MC_SAMPLES);
    for _ in 0..MC_SAMPLES {
        let mut log_psi_bar = 0.0;
        let mut lw = 0.0;
        for &(n, g) in active {
            let x: f64 = rng.random::<f64>().powf(1.0 / kf).max(f64::MIN_POSITIVE);
            let lx = x.ln();
            log_psi_bar += lx;
            let one_minus = -(lx / g).exp_m1();
            lw += (n as f64 - 1.0) * one_minus.ln() - g.ln() - ln_gamma(n as f64) - kf.ln();
        }
        logs.push(lw + log_psi_big_unchecked(k, log_psi_bar.exp(), lambda));
    }
    let n = logs.len() as f64;
    let log_mean = log_sum_exp(&logs) - n.ln();
    let mean = 1.0;
    let var = logs
        .iter()
        .map(|l| ((l - log_mean).exp() - mean).powi(2))
        .sum::<f64>()
        / (n - 1.0);
    let rel_se = (var / n).sqrt();
    if !log_mean.is_finite() {
        return Err(HmfmError::Numerical("Monte Carlo estimate of V vanished".into()));
    }
    Ok(VIntegral {
        log_value: log_mean,
        rel_error: rel_se,
        method: VMethod::MonteCarlo,
    })
}

/// Log of the partially exchangeable partition probability function:
/// `log V(K; γ, Λ) + Σ_j Σ_k log (γ_j)_{n_{j,k}}`.
pub fn log_peppf(counts: &GroupCounts, params: &VecFdpParams) -> Result<f64> {
    if counts.d() != params.d() {
        return Err(HmfmError::dimension(format!(
            "counts have {} groups, params {}",
            counts.d(),
            params.d()
        )));
    }
    let n = counts.group_sizes();
    let v = log_v(counts.k(), &n, params)?;
    let mut total = v.log_value;
    for (j, g) in params.gamma().iter().enumerate() {
        for &c in counts.row(j) {
            total += ln_pochhammer(*g, c as f64);
        }
    }
    Ok(total)
}
