use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::GroupedDataset;
use crate::error::{HmfmError, Result};

/// Gaussian prior `β_j ~ N(β₀, Σ₀)` on the group-specific regression
/// coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionSpec {
    beta0: DVector<f64>,
    sigma0: DMatrix<f64>,
    precision0: DMatrix<f64>,
}

impl RegressionSpec {
    pub fn new(beta0: DVector<f64>, sigma0: DMatrix<f64>) -> Result<Self> {
        let r = beta0.len();
        if sigma0.nrows() != r || sigma0.ncols() != r {
            return Err(HmfmError::dimension(format!(
                "prior covariance is {}x{}, expected {r}x{r}",
                sigma0.nrows(),
                sigma0.ncols()
            )));
        }
        if (&sigma0 - sigma0.transpose()).amax() > 1e-12 * sigma0.amax().max(1.0) {
            return Err(HmfmError::domain("prior covariance is not symmetric"));
        }
        let chol = sigma0
            .clone()
            .cholesky()
            .ok_or_else(|| HmfmError::domain("prior covariance is not positive definite"))?;
        Ok(RegressionSpec {
            beta0,
            precision0: chol.inverse(),
            sigma0,
        })
    }

    /// `β₀ = b·1`, `Σ₀ = s·I`.
    pub fn isotropic(r: usize, b: f64, s: f64) -> Result<Self> {
        Self::new(DVector::from_element(r, b), DMatrix::identity(r, r) * s)
    }

    pub fn r(&self) -> usize {
        self.beta0.len()
    }

    pub fn beta0(&self) -> &DVector<f64> {
        &self.beta0
    }

    pub fn sigma0(&self) -> &DMatrix<f64> {
        &self.sigma0
    }
}

fn check_betas(data: &GroupedDataset, beta: &[DVector<f64>]) -> Result<()> {
    if !data.has_covariates() {
        return Err(HmfmError::dimension("dataset has no covariates"));
    }
    if beta.len() != data.d() || beta.iter().any(|b| b.len() != data.r()) {
        return Err(HmfmError::dimension(format!(
            "need {} coefficient vectors of length {}",
            data.d(),
            data.r()
        )));
    }
    Ok(())
}

fn fitted(x: &[f64], beta: &DVector<f64>) -> f64 {
    x.iter().zip(beta.iter()).map(|(a, b)| a * b).sum()
}

/// Responses minus `x β_j`, mark by mark.
pub fn residualize(data: &GroupedDataset, beta: &[DVector<f64>]) -> Result<GroupedDataset> {
    check_betas(data, beta)?;
    Ok(data.map_marks(|j, o, y| y - fitted(o.covariates.as_deref().unwrap_or(&[]), &beta[j])))
}

/// Inverse of [`residualize`]: adds `x β_j` back.
pub fn restore(data: &GroupedDataset, beta: &[DVector<f64>]) -> Result<GroupedDataset> {
    check_betas(data, beta)?;
    Ok(data.map_marks(|j, o, y| y + fitted(o.covariates.as_deref().unwrap_or(&[]), &beta[j])))
}

/// Mean and covariance of `β_j` given the cluster parameters `(μ, σ²)`
/// attached to each observation of group `j`.
pub fn beta_full_conditional(
    data: &GroupedDataset,
    j: usize,
    components: &[(f64, f64)],
    spec: &RegressionSpec,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let (mean, chol) = conditional_parts(data, j, components, spec)?;
    Ok((mean, chol.inverse()))
}

fn conditional_parts(
    data: &GroupedDataset,
    j: usize,
    components: &[(f64, f64)],
    spec: &RegressionSpec,
) -> Result<(DVector<f64>, nalgebra::Cholesky<f64, nalgebra::Dyn>)> {
    let group = data.group(j);
    if components.len() != group.len() {
        return Err(HmfmError::dimension(format!(
            "{} component assignments for {} observations",
            components.len(),
            group.len()
        )));
    }
    let r = spec.r();
    if !group.is_empty() && data.r() != r {
        return Err(HmfmError::dimension(format!(
            "data have {} covariates, prior has {r}",
            data.r()
        )));
    }
    let mut precision = spec.precision0.clone();
    let mut rhs = &spec.precision0 * &spec.beta0;
    for (obs, &(mu, s2)) in group.iter().zip(components) {
        let x = DVector::from_column_slice(obs.covariates.as_deref().unwrap_or(&[]));
        let h = obs.marks.len() as f64;
        precision += (&x * x.transpose()) * (h / s2);
        let resid: f64 = obs.marks.iter().map(|y| y - mu).sum();
        rhs += &x * (resid / s2);
    }
    let chol = precision
        .cholesky()
        .ok_or_else(|| HmfmError::Numerical("posterior precision of beta is singular".into()))?;
    let mean = chol.solve(&rhs);
    Ok((mean, chol))
}

/// Draws `β_j` from its Gaussian full conditional.
pub fn beta_full_conditional_draw<R: Rng + ?Sized>(
    data: &GroupedDataset,
    j: usize,
    components: &[(f64, f64)],
    spec: &RegressionSpec,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let (mean, chol) = conditional_parts(data, j, components, spec)?;
    let z = DVector::from_fn(spec.r(), |_, _| StandardNormal.sample(rng));
    // precision = L Lᵀ, so L⁻ᵀ z has covariance precision⁻¹
    let shift = chol
        .l()
        .transpose()
        .solve_upper_triangular(&z)
        .ok_or_else(|| HmfmError::Numerical("triangular solve failed".into()))?;
    Ok(mean + shift)
}

/// Subtracts each group's mean response; returns the centred data and the means.
pub fn center_groups(data: &GroupedDataset) -> (GroupedDataset, Vec<f64>) {
    let means: Vec<f64> = data
        .groups()
        .iter()
        .map(|g| {
            let (s, c) = g
                .iter()
                .flat_map(|o| o.marks.iter())
                .fold((0.0, 0usize), |(s, c), y| (s + y, c + 1));
            if c == 0 {
                0.0
            } else {
                s / c as f64
            }
        })
        .collect();
    let centred = data.map_marks(|j, _, y| y - means[j]);
    (centred, means)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::likelihood::Observation;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toy() -> GroupedDataset {
        GroupedDataset::new(vec![
            vec![
                Observation::with_covariates(vec![1.0, 1.5], vec![1.0]),
                Observation::with_covariates(vec![-0.5], vec![0.0]),
            ],
            vec![Observation::with_covariates(vec![2.25], vec![1.0])],
        ])
        .unwrap()
    }

    #[test]
    fn zero_beta_is_identity_and_unit_beta_shifts() {
        let d = toy();
        let zero = vec![DVector::zeros(1); 2];
        assert_eq!(residualize(&d, &zero).unwrap(), d);
        let one = vec![DVector::from_element(1, 1.0); 2];
        let shifted = residualize(&d, &one).unwrap();
        assert_eq!(shifted.group(0)[0].marks, vec![0.0, 0.5]);
        assert_eq!(shifted.group(0)[1].marks, vec![-0.5]);
        assert_eq!(restore(&shifted, &one).unwrap(), d);
    }

    #[test]
    fn wrong_dimensions_error() {
        let d = toy();
        assert!(residualize(&d, &[DVector::zeros(1)]).is_err());
        assert!(residualize(&d, &[DVector::zeros(2), DVector::zeros(2)]).is_err());
        let plain = GroupedDataset::from_scalars(vec![vec![1.0]]).unwrap();
        assert!(residualize(&plain, &[DVector::zeros(1)]).is_err());
    }

    #[test]
    fn empty_group_draws_from_prior() {
        let d = GroupedDataset::new(vec![
            vec![Observation::with_covariates(vec![1.0], vec![2.0])],
            vec![],
        ])
        .unwrap();
        let spec = RegressionSpec::isotropic(1, -2.0, 1.0).unwrap();
        let (m, v) = beta_full_conditional(&d, 1, &[], &spec).unwrap();
        assert!((m[0] + 2.0).abs() < 1e-12);
        assert!((v[(0, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tight_prior_pins_beta() {
        let spec = RegressionSpec::isotropic(1, 0.7, 1e-12).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let b = beta_full_conditional_draw(&toy(), 0, &[(0.0, 1.0), (3.0, 0.2)], &spec, &mut rng).unwrap();
            assert!((b[0] - 0.7).abs() < 1e-4);
        }
    }

    #[test]
    fn scalar_case_closed_form() {
        // one covariate: precision 1/s0 + Σ h x²/σ², mean ∝ β0/s0 + Σ x Σ(y-μ)/σ²
        let spec = RegressionSpec::isotropic(1, 0.5, 2.0).unwrap();
        let comps = [(0.2, 0.5), (1.0, 3.0)];
        let (m, v) = beta_full_conditional(&toy(), 0, &comps, &spec).unwrap();
        let prec = 0.5 + 2.0 * 1.0 / 0.5 + 0.0;
        let rhs = 0.5 * 0.5 + ((1.0 - 0.2) + (1.5 - 0.2)) / 0.5;
        assert!((v[(0, 0)] - 1.0 / prec).abs() < 1e-12);
        assert!((m[0] - rhs / prec).abs() < 1e-12);
    }

    #[test]
    fn centring() {
        let d = GroupedDataset::from_scalars(vec![vec![3.0, 3.0, 3.0], vec![1.0, 2.0, 6.0]]).unwrap();
        let (c, means) = center_groups(&d);
        assert_eq!(means, vec![3.0, 3.0]);
        assert!(c.group(0).iter().all(|o| o.marks == vec![0.0]));
        let s: f64 = c.group(1).iter().map(|o| o.marks[0]).sum();
        assert!(s.abs() < 1e-12);
        let (again, m2) = center_groups(&c);
        assert_eq!(again, c);
        assert!(m2.iter().all(|m| m.abs() < 1e-12));
    }

    #[test]
    fn rejects_bad_covariance() {
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(RegressionSpec::new(DVector::zeros(2), bad).is_err());
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert!(RegressionSpec::new(DVector::zeros(2), asym).is_err());
    }
}
