//! Marginal (franchise) sampler with MALA moves on U and gamma.

use hmfm::harness::{generate_experiment, ExperimentSpec, RunConfig};
use hmfm::sampler::{self, Algorithm};

fn main() -> hmfm::Result<()> {
    let exp = generate_experiment(&ExperimentSpec { id: 2, n: Some(100), seed: 2 })?;
    let config = RunConfig {
        algorithm: Algorithm::Marginal,
        iterations: 3_000,
        burn_in: 1_000,
        lambda0: Some(10.0),
        v_lambda: Some(2.0),
        gamma0: Some(0.01),
        ..RunConfig::default()
    };
    let out = sampler::run(config.algorithm, &exp.data, &config.sampler_config(0), &config.priors(&exp.data)?)?;
    let last = out.records.last().expect("retained draws");
    println!("final state: K = {}, Lambda = {:.3}, gamma = {:?}", last.k, last.lambda, last.gamma);
    for c in &last.clusters {
        println!("  counts per group {:?}, posterior mean {:.3}", c.counts, c.posterior.mu0);
    }
    let pmf = out.k_pmf(8);
    println!("P(K = 2 | data) = {:.3}", pmf[2]);
    for (name, rate) in &out.acceptance {
        println!("acceptance {name}: {rate:.3}");
    }
    Ok(())
}
