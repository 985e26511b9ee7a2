//! Point estimate, similarity, ARI, CCE and predictive score from one fit.

use hmfm::harness::{fit, generate_experiment, ExperimentSpec, RunConfig};
use hmfm::postprocess::{ari, cce, predictive_score, SimilarityMatrix};

fn main() -> hmfm::Result<()> {
    let exp = generate_experiment(&ExperimentSpec { id: 1, n: None, seed: 3 })?;
    let config = RunConfig {
        iterations: 3_000,
        burn_in: 1_000,
        lambda0: Some(5.0),
        v_lambda: Some(5.0),
        gamma0: Some(0.5),
        ..RunConfig::default()
    };
    let result = fit(&exp.data, &config)?;
    let est = &result.partition;
    println!("estimated K = {} (truth {})", est.k, exp.true_k());
    let truth_sim = SimilarityMatrix::from_labels(&exp.truth);
    println!("CCE = {:.3}", cce(&truth_sim, &result.similarity)?);
    for j in 0..exp.data.d() {
        let a = ari(&exp.truth[j], est.group(j))?;
        let mix = &exp.densities[j];
        let ps = predictive_score(|y| mix.pdf(y), &result.densities[j], &result.grid)?;
        println!("group {}: ARI {a:.3}, predictive score {ps:.3}", j + 1);
    }
    Ok(())
}
