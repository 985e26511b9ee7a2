//! Forward simulation from the prior, checked against the exact law of K.

use hmfm::prior::{prior_k_pmf, prior_simulate, VecFdpParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> hmfm::Result<()> {
    let p = VecFdpParams::new(3.0, vec![1.0, 0.3])?;
    let n = [4, 4];
    let exact = prior_k_pmf(&n, &p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let draws = 50_000;
    let mut freq = vec![0.0; exact.len()];
    for _ in 0..draws {
        let real = prior_simulate(&p, |_| (), &mut rng);
        let mut labels = real.sample_labels(&n, &mut rng).concat();
        labels.sort_unstable();
        labels.dedup();
        freq[labels.len()] += 1.0 / draws as f64;
    }
    println!("k  exact    simulated");
    for k in 1..exact.len() {
        println!("{k}  {:.4}   {:.4}", exact[k], freq[k]);
    }
    Ok(())
}
