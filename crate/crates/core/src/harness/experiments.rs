use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{HmfmError, Result};
use crate::likelihood::GroupedDataset;

/// Finite Gaussian mixture; `components` index the experiment's global list.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixture {
    pub weights: Vec<f64>,
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
    pub components: Vec<usize>,
}

impl GaussianMixture {
    pub fn pdf(&self, y: f64) -> f64 {
        self.weights
            .iter()
            .zip(self.means.iter().zip(&self.variances))
            .map(|(w, (m, v))| w * (-(y - m).powi(2) / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt())
            .sum()
    }

    pub fn mean(&self) -> f64 {
        self.weights.iter().zip(&self.means).map(|(w, m)| w * m).sum()
    }

    /// One draw and the global index of its component.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, usize) {
        let mut u: f64 = rng.random();
        let mut c = self.weights.len() - 1;
        for (i, w) in self.weights.iter().enumerate() {
            if u < *w {
                c = i;
                break;
            }
            u -= w;
        }
        let y = Normal::new(self.means[c], self.variances[c].sqrt()).expect("valid component").sample(rng);
        (y, self.components[c])
    }
}

/// Which simulated design to draw and how large.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExperimentSpec {
    pub id: u8,
    /// Per-group size for designs 1 and 3, total size for design 2;
    /// `None` picks 300, 100 and 30.
    pub n: Option<usize>,
    pub seed: u64,
}

/// Simulated data with the generating partition and densities.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub data: GroupedDataset,
    pub truth: Vec<Vec<usize>>,
    pub densities: Vec<GaussianMixture>,
}

impl Experiment {
    /// Number of distinct generating components among the observations.
    pub fn true_k(&self) -> usize {
        let mut seen: Vec<usize> = self.truth.iter().flatten().copied().collect();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }
}

fn mixture(parts: &[(f64, f64, f64, usize)]) -> GaussianMixture {
    GaussianMixture {
        weights: parts.iter().map(|p| p.0).collect(),
        means: parts.iter().map(|p| p.1).collect(),
        variances: parts.iter().map(|p| p.2).collect(),
        components: parts.iter().map(|p| p.3).collect(),
    }
}

fn design(spec: &ExperimentSpec, rng: &mut ChaCha8Rng) -> Result<(Vec<GaussianMixture>, Vec<usize>)> {
    match spec.id {
        1 => {
            let n = spec.n.unwrap_or(300);
            let g1 = mixture(&[(0.5, -3.0, 0.1, 0), (0.5, 0.0, 0.5, 1)]);
            let g2 = mixture(&[(0.2, 0.0, 0.5, 1), (0.8, 1.75, 1.5, 2)]);
            Ok((vec![g1, g2], vec![n, n]))
        }
        2 => {
            let n = spec.n.unwrap_or(100);
            if n % 2 != 0 {
                return Err(HmfmError::Config(format!("experiment 2 needs an even total size, got {n}")));
            }
            Ok((
                vec![mixture(&[(1.0, 0.0, 1.0, 0)]), mixture(&[(1.0, 1.0, 1.0, 1)])],
                vec![n / 2, n / 2],
            ))
        }
        3 => {
            let n = spec.n.unwrap_or(30);
            let means = [-3.0, 0.0, 1.0];
            let mut groups = Vec::with_capacity(15);
            for _ in 0..12 {
                let k: usize = rng.random_range(2..=3);
                let mut chosen: Vec<usize> = (0..3).collect::<Vec<_>>().choose_multiple(rng, k).copied().collect();
                chosen.sort_unstable();
                let has_middle = chosen.contains(&1);
                let middle = match (has_middle, k) {
                    (true, 3) => 0.5,
                    (true, _) => 2.0 / 3.0,
                    _ => 0.0,
                };
                let others = (1.0 - middle) / (k - usize::from(has_middle)) as f64;
                let parts: Vec<_> = chosen
                    .iter()
                    .map(|&c| (if c == 1 { middle } else { others }, means[c], 0.5, c))
                    .collect();
                groups.push(mixture(&parts));
            }
            for _ in 0..3 {
                groups.push(mixture(&[(0.5, -1.5, 0.5, 3), (0.5, 1.5, 0.5, 4)]));
            }
            Ok((groups, vec![n; 15]))
        }
        other => Err(HmfmError::Config(format!("unknown experiment {other}; expected 1, 2 or 3"))),
    }
}

/// Draws a dataset from design 1, 2 or 3; deterministic given the seed.
pub fn generate_experiment(spec: &ExperimentSpec) -> Result<Experiment> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (densities, sizes) = design(spec, &mut rng)?;
    if sizes.iter().any(|&n| n == 0) {
        return Err(HmfmError::Config("experiment size must be positive".into()));
    }
    let mut ys = Vec::with_capacity(sizes.len());
    let mut truth = Vec::with_capacity(sizes.len());
    for (mix, &n) in densities.iter().zip(&sizes) {
        let (y, c): (Vec<f64>, Vec<usize>) = (0..n).map(|_| mix.sample(&mut rng)).unzip();
        ys.push(y);
        truth.push(c);
    }
    Ok(Experiment {
        data: GroupedDataset::from_scalars(ys)?,
        truth,
        densities,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn experiment_one_group_mean() {
        let e = generate_experiment(&ExperimentSpec { id: 1, n: None, seed: 3 }).unwrap();
        assert_eq!(e.data.group_sizes(), vec![300, 300]);
        let ys: Vec<f64> = e.data.group(0).iter().map(|o| o.marks[0]).collect();
        let n = ys.len() as f64;
        let m = ys.iter().sum::<f64>() / n;
        let sd = (ys.iter().map(|y| (y - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!((m - e.densities[0].mean()).abs() < 3.0 * sd / n.sqrt());
        assert_eq!(e.densities[0].mean(), -1.5);
        assert_eq!(e.true_k(), 3);
    }

    #[test]
    fn experiment_two_has_two_clusters() {
        for n in [50, 100, 200] {
            let e = generate_experiment(&ExperimentSpec { id: 2, n: Some(n), seed: 1 }).unwrap();
            assert_eq!(e.true_k(), 2);
            assert_eq!(e.data.n_total(), n);
        }
        assert!(generate_experiment(&ExperimentSpec { id: 2, n: Some(51), seed: 1 }).is_err());
    }

    #[test]
    fn experiment_three_has_five_components() {
        for seed in 0..20 {
            let e = generate_experiment(&ExperimentSpec { id: 3, n: None, seed }).unwrap();
            assert_eq!(e.data.d(), 15);
            assert_eq!(e.true_k(), 5, "seed {seed}");
            for mix in &e.densities {
                assert!((mix.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                if mix.components.len() == 2 && mix.components.contains(&1) {
                    let w = mix.weights[mix.components.iter().position(|&c| c == 1).unwrap()];
                    assert!((w - 2.0 / 3.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn deterministic() {
        let s = ExperimentSpec { id: 3, n: Some(10), seed: 9 };
        assert_eq!(generate_experiment(&s).unwrap().data, generate_experiment(&s).unwrap().data);
    }
}
