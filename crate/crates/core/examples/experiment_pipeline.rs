//! Simulate, fit from a TOML config and write every output file.

use hmfm::harness::output::{write_experiment, write_fit};
use hmfm::harness::{fit, generate_experiment, ingest_csv, ExperimentSpec, RunConfig};

fn main() -> hmfm::Result<()> {
    let dir = std::env::temp_dir().join("hmfm_pipeline_example");
    let exp = generate_experiment(&ExperimentSpec { id: 3, n: None, seed: 4 })?;
    write_experiment(&exp, &dir.join("sim"))?;
    let data = ingest_csv(dir.join("sim").join("data.csv"))?;

    let config = RunConfig::from_toml(
        r#"
        algorithm = "conditional"
        iterations = 2000
        burn_in = 1000
        chains = 2
        lambda0 = 15.0
        v_lambda = 3.0
        gamma0 = 0.05
        "#,
    )?;
    let result = fit(&data, &config)?;
    write_fit(&result, &dir.join("fit"))?;
    println!("{} groups, {} observations", data.d(), data.n_total());
    println!("estimated K = {}, truth {}", result.partition.k, exp.true_k());
    println!("outputs in {}", dir.display());
    Ok(())
}
