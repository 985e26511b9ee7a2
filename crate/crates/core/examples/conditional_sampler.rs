//! Blocked Gibbs sampler on the shared-component two-group design.

use hmfm::harness::{generate_experiment, ExperimentSpec, RunConfig};
use hmfm::sampler::{self, Algorithm};

fn main() -> hmfm::Result<()> {
    let exp = generate_experiment(&ExperimentSpec { id: 1, n: None, seed: 1 })?;
    let config = RunConfig {
        iterations: 3_000,
        burn_in: 1_000,
        lambda0: Some(5.0),
        v_lambda: Some(5.0),
        gamma0: Some(0.5),
        ..RunConfig::default()
    };
    let out = sampler::run(Algorithm::Conditional, &exp.data, &config.sampler_config(0), &config.priors(&exp.data)?)?;
    let pmf = out.k_pmf(10);
    println!("posterior of K (truth {}):", exp.true_k());
    for (k, q) in pmf.iter().enumerate().filter(|(_, q)| **q > 0.0) {
        println!("  {k}: {q:.3}");
    }
    let m: f64 = out.records.iter().filter_map(|r| r.m).map(|m| m as f64).sum::<f64>() / out.records.len() as f64;
    println!("mean number of components M: {m:.2}");
    for (name, rate) in &out.acceptance {
        println!("acceptance {name}: {rate:.3}");
    }
    Ok(())
}
