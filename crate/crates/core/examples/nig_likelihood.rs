//! Conjugate Normal-Inverse-Gamma kernel and the regression update.

use hmfm::likelihood::{
    beta_full_conditional, log_marginal, nig_posterior, residualize, ClusterSuffStats, GroupedDataset,
    NigParams, Observation, RegressionSpec,
};
use nalgebra::DVector;

fn main() -> hmfm::Result<()> {
    let base = NigParams::new(0.0, 0.1, 4.0, 0.5)?;
    let ys = [0.8, 1.3, 0.9, 1.7];
    let stats = ClusterSuffStats::from_values(&ys);
    let post = nig_posterior(&stats, &base);
    println!("posterior: {post:?}");
    println!("log marginal likelihood: {:.6}", log_marginal(&stats, &base));
    let t = post.predictive();
    println!("predictive density at 1.0: {:.5}", t.pdf(1.0));

    // one group, responses y = 2 + 0.5 x + noise, one cluster at (2, 0.1)
    let xs = [-1.0, 0.0, 1.0, 2.0, 3.0];
    let noise = [0.1, -0.2, 0.05, 0.15, -0.1];
    let group: Vec<Observation> = xs
        .iter()
        .zip(noise)
        .map(|(&x, e)| Observation::with_covariates(vec![2.0 + 0.5 * x + e], vec![x]))
        .collect();
    let data = GroupedDataset::new(vec![group])?;
    let spec = RegressionSpec::isotropic(1, 0.0, 10.0)?;
    let (mean, cov) = beta_full_conditional(&data, 0, &[(2.0, 0.1); 5], &spec)?;
    println!("beta | rest: mean {:.4}, var {:.5}", mean[0], cov[(0, 0)]);
    let resid = residualize(&data, &[DVector::from_element(1, mean[0])])?;
    println!("residuals: {:?}", resid.group(0).iter().map(|o| o.marks[0]).collect::<Vec<_>>());
    Ok(())
}
