use crate::error::{HmfmError, Result};
use crate::likelihood::GroupedDataset;
use crate::sampler::{Algorithm, ChainOutput};

/// 512 points over `[min(y) - 4 sd, max(y) + 4 sd]` of the pooled responses.
pub fn default_grid(data: &GroupedDataset) -> Vec<f64> {
    let ys = data.pooled_marks();
    let n = ys.len().max(1) as f64;
    let mean = ys.iter().sum::<f64>() / n;
    let sd = (ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n).sqrt();
    let lo = ys.iter().cloned().fold(f64::INFINITY, f64::min) - 4.0 * sd;
    let hi = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 4.0 * sd;
    let (lo, hi) = if lo.is_finite() && hi > lo { (lo, hi) } else { (-4.0, 4.0) };
    (0..512).map(|i| lo + (hi - lo) * i as f64 / 511.0).collect()
}

fn normal_pdf(y: f64, mu: f64, s2: f64) -> f64 {
    (-(y - mu).powi(2) / (2.0 * s2)).exp() / (2.0 * std::f64::consts::PI * s2).sqrt()
}

/// Posterior predictive density of a new response in group `j`, averaged
/// over the retained iterations.
///
/// Conditional chains use the recorded components,
/// `Σ_m (S_{j,m}/T_j) N(y | μ_m, σ²_m)`. Marginal chains use the predictive
/// weights of the franchise with each cluster's Student-t posterior
/// predictive and the base-measure predictive for a new cluster.
pub fn predictive_density(out: &ChainOutput, j: usize, grid: &[f64]) -> Result<Vec<f64>> {
    if grid.is_empty() {
        return Err(HmfmError::domain("empty density grid"));
    }
    if out.records.is_empty() {
        return Err(HmfmError::EmptyChain);
    }
    if j >= out.group_sizes.len() {
        return Err(HmfmError::dimension(format!("group {} of {}", j + 1, out.group_sizes.len())));
    }
    let mut dens = vec![0.0; grid.len()];
    for r in &out.records {
        match out.algorithm {
            Algorithm::Conditional => {
                if r.components.is_empty() {
                    return Err(HmfmError::Config("chain was run without component records".into()));
                }
                let t: f64 = r.components.iter().map(|c| c.s[j]).sum();
                for c in &r.components {
                    let w = c.s[j] / t;
                    for (d, &y) in dens.iter_mut().zip(grid) {
                        *d += w * normal_pdf(y, c.mu, c.sigma2);
                    }
                }
            }
            Algorithm::Marginal => {
                if r.clusters.is_empty() {
                    return Err(HmfmError::Config("chain was run without cluster records".into()));
                }
                let k = r.clusters.len() as f64;
                let g = r.gamma[j];
                let pb: f64 = r.u.iter().zip(&r.gamma).map(|(u, g)| -g * u.ln_1p()).sum::<f64>().exp();
                let lam = r.lambda;
                let w_new = pb * g * lam * (k + 1.0 + lam * pb) / (k + lam * pb);
                let weights: Vec<f64> = r.clusters.iter().map(|c| c.counts[j] as f64 + g).collect();
                let z = weights.iter().sum::<f64>() + w_new;
                for (c, w) in r.clusters.iter().zip(&weights) {
                    let t = c.posterior.predictive();
                    for (d, &y) in dens.iter_mut().zip(grid) {
                        *d += w / z * t.pdf(y);
                    }
                }
                let t0 = out.base.predictive();
                for (d, &y) in dens.iter_mut().zip(grid) {
                    *d += w_new / z * t0.pdf(y);
                }
            }
        }
    }
    let n = out.records.len() as f64;
    dens.iter_mut().for_each(|d| *d /= n);
    Ok(dens)
}

/// Trapezoid rule for values on a sorted grid.
pub fn trapezoid(grid: &[f64], values: &[f64]) -> f64 {
    grid.windows(2)
        .zip(values.windows(2))
        .map(|(x, f)| 0.5 * (x[1] - x[0]) * (f[0] + f[1]))
        .sum()
}

/// L1 distance between a true density and an estimate on `grid`. Warns when
/// the true density leaves more than `1e-4` of its mass off the grid.
pub fn predictive_score<F: Fn(f64) -> f64>(truth: F, est: &[f64], grid: &[f64]) -> Result<f64> {
    if grid.len() != est.len() || grid.len() < 2 {
        return Err(HmfmError::dimension(format!(
            "{} grid points for {} density values",
            grid.len(),
            est.len()
        )));
    }
    let t: Vec<f64> = grid.iter().map(|&y| truth(y)).collect();
    let mass = trapezoid(grid, &t);
    if 1.0 - mass > 1e-4 {
        log::warn!("grid covers only {mass:.6} of the true density");
    }
    let diff: Vec<f64> = t.iter().zip(est).map(|(a, b)| (a - b).abs()).collect();
    Ok(trapezoid(grid, &diff))
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ContinuousCDF, Normal};

    fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn score_examples() {
        let g = grid(-20.0, 30.0, 20_001);
        let f0: Vec<f64> = g.iter().map(|&y| normal_pdf(y, 0.0, 1.0)).collect();
        assert!(predictive_score(|y| normal_pdf(y, 0.0, 1.0), &f0, &g).unwrap() < 1e-12);
        let f10: Vec<f64> = g.iter().map(|&y| normal_pdf(y, 10.0, 1.0)).collect();
        assert!((predictive_score(|y| normal_pdf(y, 0.0, 1.0), &f10, &g).unwrap() - 2.0).abs() < 1e-5);
        let f1: Vec<f64> = g.iter().map(|&y| normal_pdf(y, 1.0, 1.0)).collect();
        let want = 2.0 * (2.0 * Normal::standard().cdf(0.5) - 1.0);
        assert!((want - 0.765_85).abs() < 1e-5);
        assert!((predictive_score(|y| normal_pdf(y, 0.0, 1.0), &f1, &g).unwrap() - want).abs() < 1e-6);
    }
}
