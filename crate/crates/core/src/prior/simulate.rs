use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};

use super::VecFdpParams;
use crate::special::sample_log_categorical;

/// One draw of `(P_1, ..., P_d)`: `M` shared atoms and a `d × M` matrix of
/// unnormalized `Gamma(γ_j, 1)` jumps.
#[derive(Debug, Clone)]
pub struct PriorRealization<T> {
    pub atoms: Vec<T>,
    pub jumps: Vec<Vec<f64>>,
}

impl<T> PriorRealization<T> {
    pub fn m(&self) -> usize {
        self.atoms.len()
    }

    /// Normalized weights of group `j`.
    pub fn weights(&self, j: usize) -> Vec<f64> {
        let t: f64 = self.jumps[j].iter().sum();
        self.jumps[j].iter().map(|s| s / t).collect()
    }

    /// `P_j(A)` for the set `{x : in_set(x)}`.
    pub fn mass<F: Fn(&T) -> bool>(&self, j: usize, in_set: F) -> f64 {
        let t: f64 = self.jumps[j].iter().sum();
        self.atoms
            .iter()
            .zip(&self.jumps[j])
            .filter(|(a, _)| in_set(a))
            .map(|(_, s)| s)
            .sum::<f64>()
            / t
    }

    /// Draws `n[j]` component labels in each group from the normalized weights.
    pub fn sample_labels<R: Rng + ?Sized>(&self, n: &[usize], rng: &mut R) -> Vec<Vec<usize>> {
        n.iter()
            .enumerate()
            .map(|(j, &nj)| {
                let lw: Vec<f64> = self.jumps[j].iter().map(|s| s.ln()).collect();
                (0..nj).map(|_| sample_log_categorical(&lw, rng)).collect()
            })
            .collect()
    }
}

/// Forward simulation: `M ~ 1 + Poisson(Λ)`, atoms i.i.d. from `base`,
/// `S_{j,m} ~ Gamma(γ_j, 1)`.
pub fn prior_simulate<T, R, F>(params: &VecFdpParams, mut base: F, rng: &mut R) -> PriorRealization<T>
where
    R: Rng + ?Sized,
    F: FnMut(&mut R) -> T,
{
    let extra = Poisson::new(params.lambda())
        .expect("lambda validated positive")
        .sample(rng) as usize;
    let m = 1 + extra;
    let atoms = (0..m).map(|_| base(rng)).collect();
    let jumps = params
        .gamma()
        .iter()
        .map(|&g| {
            let dist = Gamma::new(g, 1.0).expect("gamma validated positive");
            (0..m)
                .map(|_| dist.sample(rng).max(f64::MIN_POSITIVE))
                .collect()
        })
        .collect();
    PriorRealization { atoms, jumps }
}
