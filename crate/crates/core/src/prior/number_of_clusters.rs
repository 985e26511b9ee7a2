use super::{GfcTable, VecFdpParams};
use crate::error::{HmfmError, Result};
use crate::special::{ln_factorial, ln_gamma, log_add_exp};

/// Truncation rule for the series over the number of unused components.
#[derive(Debug, Clone, Copy)]
pub struct SeriesControl {
    /// Stop once a term is below `rel_tol` times the running sum and terms decrease.
    pub rel_tol: f64,
    /// Fail with [`HmfmError::SeriesCap`] after this many terms.
    pub max_terms: usize,
}

impl Default for SeriesControl {
    fn default() -> Self {
        SeriesControl {
            rel_tol: 1e-12,
            max_terms: 100_000,
        }
    }
}

fn check_sizes(n: &[usize], params: &VecFdpParams) -> Result<()> {
    if n.len() != params.d() {
        return Err(HmfmError::dimension(format!(
            "{} group sizes for d = {}",
            n.len(),
            params.d()
        )));
    }
    Ok(())
}

/// `log V(K; γ, Λ)` as a series over `M = K + m`:
/// `Σ_m (m+K)!/m! q(m+K) ∏_j Γ(γ_j(m+K)) / Γ(γ_j(m+K) + n_j)`,
/// with `q` the pmf of `1 + Poisson(Λ)`.
pub fn log_v_series(k: usize, n: &[usize], params: &VecFdpParams) -> Result<f64> {
    log_v_series_with(k, n, params, &SeriesControl::default())
}

fn log_v_series_with(
    k: usize,
    n: &[usize],
    params: &VecFdpParams,
    ctrl: &SeriesControl,
) -> Result<f64> {
    check_sizes(n, params)?;
    if k == 0 {
        return Err(HmfmError::domain("K must be at least 1"));
    }
    let lambda = params.lambda();
    let ln_lambda = lambda.ln();
    let log_tol = ctrl.rel_tol.ln();
    let mut total = f64::NEG_INFINITY;
    let mut prev = f64::NEG_INFINITY;
    for m in 0..ctrl.max_terms {
        let big_m = m + k;
        let mf = big_m as f64;
        let mut t = ln_factorial(big_m) - ln_factorial(m) - lambda + (mf - 1.0) * ln_lambda
            - ln_factorial(big_m - 1);
        for (&nj, &g) in n.iter().zip(params.gamma()) {
            if nj > 0 {
                t += ln_gamma(g * mf) - ln_gamma(g * mf + nj as f64);
            }
        }
        total = log_add_exp(total, t);
        if t < prev && t - total < log_tol {
            return Ok(total);
        }
        prev = t;
    }
    Err(HmfmError::SeriesCap {
        cap: ctrl.max_terms,
    })
}

/// Prior probability that the `n_1 + ... + n_d` observations form exactly `k`
/// global clusters.
///
/// Combines the series for `V(k)` with the generalized factorial coefficients
/// of each group. Group `j` occupies `k_j` of the `k` clusters; the number of
/// ways to lay out the groups so that every cluster is used is accumulated one
/// group at a time. For two groups this reduces to the double sum over the
/// numbers of clusters missing from each group.
pub fn prior_k(n: &[usize], params: &VecFdpParams, k: usize) -> Result<f64> {
    prior_k_with(n, params, k, &SeriesControl::default())
}

pub fn prior_k_with(
    n: &[usize],
    params: &VecFdpParams,
    k: usize,
    ctrl: &SeriesControl,
) -> Result<f64> {
    check_sizes(n, params)?;
    let total: usize = n.iter().sum();
    if total == 0 {
        return Err(HmfmError::domain("at least one observation is required"));
    }
    if k == 0 || k > total {
        return Ok(0.0);
    }
    let tables = gfc_tables(n, params)?;
    Ok(log_prior_k(n, params, k, &tables, ctrl)?.exp())
}

/// The full pmf: entry `k` is `P(K = k)` for `k = 0..=Σ n_j` (entry 0 is zero).
///
/// Stops evaluating once the accumulated mass is within `1e-13` of one and the
/// pmf is decreasing; the remaining entries are reported as zero.
pub fn prior_k_pmf(n: &[usize], params: &VecFdpParams) -> Result<Vec<f64>> {
    check_sizes(n, params)?;
    let total: usize = n.iter().sum();
    if total == 0 {
        return Err(HmfmError::domain("at least one observation is required"));
    }
    let tables = gfc_tables(n, params)?;
    let ctrl = SeriesControl::default();
    let mut pmf = vec![0.0; total + 1];
    let mut mass = 0.0;
    for k in 1..=total {
        let p = log_prior_k(n, params, k, &tables, &ctrl)?.exp();
        pmf[k] = p;
        mass += p;
        if 1.0 - mass < 1e-13 && p < pmf[k - 1] {
            break;
        }
    }
    Ok(pmf)
}

fn gfc_tables(n: &[usize], params: &VecFdpParams) -> Result<Vec<GfcTable>> {
    n.iter()
        .zip(params.gamma())
        .map(|(&nj, &g)| GfcTable::new(nj, g))
        .collect()
}

fn ln_binom(a: usize, b: usize) -> f64 {
    if b > a {
        f64::NEG_INFINITY
    } else {
        ln_factorial(a) - ln_factorial(b) - ln_factorial(a - b)
    }
}

fn log_prior_k(
    n: &[usize],
    params: &VecFdpParams,
    k: usize,
    tables: &[GfcTable],
    ctrl: &SeriesControl,
) -> Result<f64> {
    // cover[c]: log of the weighted number of ways the groups seen so far use
    // exactly c of the k labelled clusters.
    let mut cover = vec![f64::NEG_INFINITY; k + 1];
    cover[0] = 0.0;
    for (&nj, table) in n.iter().zip(tables) {
        let mut next = vec![f64::NEG_INFINITY; k + 1];
        for (c, &base) in cover.iter().enumerate() {
            if base == f64::NEG_INFINITY {
                continue;
            }
            for kj in 0..=nj.min(k) {
                let w = table.ln_abs(nj, kj);
                if w == f64::NEG_INFINITY {
                    continue;
                }
                let w = w + ln_factorial(kj);
                // t fresh clusters, kj - t already used
                for t in 0..=kj.min(k - c) {
                    if kj - t > c {
                        continue;
                    }
                    let v = base + w + ln_binom(k - c, t) + ln_binom(c, kj - t);
                    next[c + t] = log_add_exp(next[c + t], v);
                }
            }
        }
        cover = next;
    }
    if cover[k] == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let log_v = log_v_series_with(k, n, params, ctrl)?;
    let out = log_v + cover[k] - ln_factorial(k);
    if out.is_nan() {
        return Err(HmfmError::Numerical(format!("P(K = {k}) evaluated to NaN")));
    }
    Ok(out)
}

/// Two-group double sum written out directly, kept as a cross-check.
#[cfg(test)]
pub(crate) fn prior_k_two_groups_direct(n1: usize, n2: usize, params: &VecFdpParams, k: usize) -> f64 {
    use crate::special::log_sum_exp;
    let t1 = GfcTable::new(n1, params.gamma()[0]).unwrap();
    let t2 = GfcTable::new(n2, params.gamma()[1]).unwrap();
    let mut terms = Vec::new();
    for r1 in 0..=k {
        for r2 in 0..=(k - r1) {
            let (k1, k2) = (k - r1, k - r2);
            if k1 > n1 || k2 > n2 {
                continue;
            }
            terms.push(
                ln_factorial(k1) + ln_factorial(k2)
                    - ln_factorial(r1)
                    - ln_factorial(r2)
                    - ln_factorial(k - r1 - r2)
                    + t1.ln_abs(n1, k1)
                    + t2.ln_abs(n2, k2),
            );
        }
    }
    (log_v_series(k, &[n1, n2], params).unwrap() + log_sum_exp(&terms)).exp()
}
