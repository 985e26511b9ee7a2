//! Marginal sampler: the mixing measures are integrated out and the state is
//! the global partition together with `U`, γ and Λ.
//!
//! Observations are reassigned one at a time with the predictive law of the
//! vector prior ("franchise" weights). `U` and γ move by Metropolis-adjusted
//! Langevin steps on the log scale and Λ by its gamma-mixture full
//! conditional.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::common::{
    check_data, initial_partition, sample_lambda, ChainOutput, ClusterRecord, IterationRecord,
    ModelPriors, Rate, RobbinsMonro, SamplerConfig,
};
use super::Algorithm;
use crate::error::{HmfmError, Result};
use crate::likelihood::{
    beta_full_conditional_draw, log_marginal, nig_draw, nig_posterior, residualize,
    ClusterSuffStats, GroupedDataset, NigParams, Observation,
};
use crate::prior::HyperPriorParams;
use crate::special::{digamma, ln_gamma, sample_log_categorical};

/// Student-t predictive with its normalizing constant cached.
#[derive(Debug, Clone, Copy)]
struct Predictive {
    loc: f64,
    inv_scale: f64,
    df: f64,
    log_c: f64,
}

impl Predictive {
    fn new(post: &NigParams) -> Self {
        let t = post.predictive();
        let log_c = ln_gamma(0.5 * (t.df + 1.0))
            - ln_gamma(0.5 * t.df)
            - 0.5 * (t.df * std::f64::consts::PI).ln()
            - t.scale.ln();
        Predictive {
            loc: t.loc,
            inv_scale: 1.0 / t.scale,
            df: t.df,
            log_c,
        }
    }

    #[inline]
    fn ln_pdf(&self, y: f64) -> f64 {
        let z = (y - self.loc) * self.inv_scale;
        self.log_c - 0.5 * (self.df + 1.0) * (z * z / self.df).ln_1p()
    }
}

#[derive(Debug, Clone)]
struct Cluster {
    counts: Vec<usize>,
    total: usize,
    stats: ClusterSuffStats,
    pred: Predictive,
}

impl Cluster {
    fn empty(d: usize, base: &NigParams) -> Self {
        Cluster {
            counts: vec![0; d],
            total: 0,
            stats: ClusterSuffStats::default(),
            pred: Predictive::new(base),
        }
    }

    fn refresh(&mut self, base: &NigParams) {
        self.pred = Predictive::new(&nig_posterior(&self.stats, base));
    }

    /// `log 𝓜(y_C ∪ obs) - log 𝓜(y_C)`.
    fn log_pred(&self, obs: &Observation, base: &NigParams) -> f64 {
        if obs.marks.len() == 1 {
            self.pred.ln_pdf(obs.marks[0])
        } else {
            let mut s = self.stats;
            s.add_obs(obs);
            log_marginal(&s, base) - log_marginal(&self.stats, base)
        }
    }
}

/// State of the marginal sampler.
#[derive(Debug, Clone)]
pub struct FranchiseState {
    clusters: Vec<Option<Cluster>>,
    free: Vec<usize>,
    /// Slot of the cluster holding each observation.
    pub allocations: Vec<Vec<usize>>,
    pub u: Vec<f64>,
    pub gamma: Vec<f64>,
    pub lambda: f64,
    pub beta: Option<Vec<DVector<f64>>>,
}

impl FranchiseState {
    /// Builds the state from a labelled partition (labels need not be contiguous).
    pub fn new(
        data: &GroupedDataset,
        labels: Vec<Vec<usize>>,
        u: Vec<f64>,
        gamma: Vec<f64>,
        lambda: f64,
        base: &NigParams,
    ) -> Result<Self> {
        let d = data.d();
        if labels.len() != d || u.len() != d || gamma.len() != d {
            return Err(HmfmError::dimension("state dimensions do not match the data"));
        }
        let slots = labels.iter().flatten().map(|l| l + 1).max().unwrap_or(0);
        let mut clusters: Vec<Option<Cluster>> = vec![None; slots];
        for (j, (group, lab)) in data.groups().iter().zip(&labels).enumerate() {
            if group.len() != lab.len() {
                return Err(HmfmError::dimension(format!("group {} label count mismatch", j + 1)));
            }
            for (obs, &l) in group.iter().zip(lab) {
                let c = clusters[l].get_or_insert_with(|| Cluster::empty(d, base));
                c.counts[j] += 1;
                c.total += 1;
                c.stats.add_obs(obs);
            }
        }
        let free = (0..slots).filter(|&s| clusters[s].is_none()).collect();
        for c in clusters.iter_mut().flatten() {
            c.refresh(base);
        }
        Ok(FranchiseState {
            clusters,
            free,
            allocations: labels,
            u,
            gamma,
            lambda,
            beta: None,
        })
    }

    pub fn d(&self) -> usize {
        self.gamma.len()
    }

    /// Number of non-empty global clusters.
    pub fn k(&self) -> usize {
        self.clusters.len() - self.free.len()
    }

    pub fn psi_bar(&self) -> f64 {
        crate::prior::psi_bar(&self.u, &self.gamma)
    }

    /// `n_{j,k}` for the active clusters, in slot order.
    pub fn counts(&self) -> Vec<Vec<usize>> {
        let active: Vec<&Cluster> = self.clusters.iter().flatten().collect();
        (0..self.d())
            .map(|j| active.iter().map(|c| c.counts[j]).collect())
            .collect()
    }

    /// Relabels clusters contiguously in order of first use.
    pub fn compact(&mut self) {
        let mut map = vec![usize::MAX; self.clusters.len()];
        let mut next = Vec::with_capacity(self.k());
        for g in &self.allocations {
            for &l in g {
                if map[l] == usize::MAX {
                    map[l] = next.len();
                    next.push(self.clusters[l].take().expect("allocated slot is active"));
                }
            }
        }
        for g in &mut self.allocations {
            for l in g.iter_mut() {
                *l = map[*l];
            }
        }
        self.clusters = next.into_iter().map(Some).collect();
        self.free.clear();
    }

    /// Labels `0..K` after [`compact`](Self::compact).
    pub fn labels(&self) -> &[Vec<usize>] {
        &self.allocations
    }

    fn rebuild_stats(&mut self, data: &GroupedDataset, base: &NigParams) {
        for c in self.clusters.iter_mut().flatten() {
            c.stats = ClusterSuffStats::default();
        }
        for (group, lab) in data.groups().iter().zip(&self.allocations) {
            for (obs, &l) in group.iter().zip(lab) {
                self.clusters[l].as_mut().expect("active").stats.add_obs(obs);
            }
        }
        for c in self.clusters.iter_mut().flatten() {
            c.refresh(base);
        }
    }

    /// Panics if counts or statistics disagree with a recomputation.
    pub fn check_invariants(&self, data: &GroupedDataset) {
        let d = self.d();
        let slots = self.clusters.len();
        let mut counts = vec![vec![0usize; slots]; d];
        let mut stats = vec![ClusterSuffStats::default(); slots];
        for (j, (group, lab)) in data.groups().iter().zip(&self.allocations).enumerate() {
            for (obs, &l) in group.iter().zip(lab) {
                counts[j][l] += 1;
                stats[l].add_obs(obs);
            }
        }
        for (s, slot) in self.clusters.iter().enumerate() {
            match slot {
                Some(c) => {
                    assert!(c.total >= 1);
                    for j in 0..d {
                        assert_eq!(c.counts[j], counts[j][s]);
                    }
                    let tol = 1e-8 * (1.0 + stats[s].sum_sq.abs());
                    assert!((c.stats.sum - stats[s].sum).abs() < tol);
                    assert!((c.stats.sum_sq - stats[s].sum_sq).abs() < tol);
                }
                None => assert!(counts.iter().all(|row| row[s] == 0)),
            }
        }
    }
}

/// Moves observation `i` of group `j` to a cluster drawn from its predictive
/// law given everything else.
pub fn reassign_observation<R: Rng + ?Sized>(
    state: &mut FranchiseState,
    data: &GroupedDataset,
    base: &NigParams,
    prior_only: bool,
    j: usize,
    i: usize,
    rng: &mut R,
) {
    let obs = &data.group(j)[i];
    let old = state.allocations[j][i];
    {
        let c = state.clusters[old].as_mut().expect("allocated slot is active");
        c.counts[j] -= 1;
        c.total -= 1;
        if c.total == 0 {
            state.clusters[old] = None;
            state.free.push(old);
        } else {
            c.stats.remove_obs(obs);
            c.refresh(base);
        }
    }
    let k = state.k() as f64;
    let lam = state.lambda;
    let pb = state.psi_bar();
    let g = state.gamma[j];
    let slots = state.clusters.len();
    let mut lw = Vec::with_capacity(slots + 1);
    for slot in &state.clusters {
        lw.push(match slot {
            Some(c) => {
                let lik = if prior_only { 0.0 } else { c.log_pred(obs, base) };
                (c.counts[j] as f64 + g).ln() + lik
            }
            None => f64::NEG_INFINITY,
        });
    }
    let lik_new = if prior_only {
        0.0
    } else {
        Cluster::empty(state.d(), base).log_pred(obs, base)
    };
    lw.push((pb * g * lam).ln() + (k + 1.0 + lam * pb).ln() - (k + lam * pb).ln() + lik_new);
    let pick = sample_log_categorical(&lw, rng);
    let target = if pick == slots {
        let slot = match state.free.pop() {
            Some(s) => s,
            None => {
                state.clusters.push(None);
                slots
            }
        };
        state.clusters[slot] = Some(Cluster::empty(state.d(), base));
        slot
    } else {
        pick
    };
    let c = state.clusters[target].as_mut().expect("target active");
    c.counts[j] += 1;
    c.total += 1;
    c.stats.add_obs(obs);
    c.refresh(base);
    state.allocations[j][i] = target;
}

#[inline]
fn softplus(v: f64) -> f64 {
    if v > 0.0 {
        v + (-v).exp().ln_1p()
    } else {
        v.exp().ln_1p()
    }
}

#[inline]
fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

/// Full conditional of `v = log U` given the partition, γ and Λ.
///
/// Groups without observations have `U_j = 0` and their coordinate is ignored.
#[derive(Debug, Clone)]
pub struct UTarget {
    pub n: Vec<usize>,
    pub k: usize,
    pub gamma: Vec<f64>,
    pub lambda: f64,
}

impl UTarget {
    fn psi_bar(&self, v: &[f64]) -> f64 {
        let s: f64 = (0..self.n.len())
            .filter(|&j| self.n[j] > 0)
            .map(|j| self.gamma[j] * softplus(v[j]))
            .sum();
        (-s).exp()
    }

    /// `Σ_j [n_j v_j - (n_j + Kγ_j) log(1+u_j)] + log(K + Λψ̄) + Λψ̄`.
    pub fn log_density(&self, v: &[f64]) -> f64 {
        let k = self.k as f64;
        let mut t = 0.0;
        for j in 0..self.n.len() {
            if self.n[j] > 0 {
                let n = self.n[j] as f64;
                t += n * v[j] - (n + k * self.gamma[j]) * softplus(v[j]);
            }
        }
        let pb = self.psi_bar(v);
        t + (k + self.lambda * pb).ln() + self.lambda * pb
    }

    pub fn gradient(&self, v: &[f64]) -> Vec<f64> {
        let k = self.k as f64;
        let pb = self.psi_bar(v);
        let common = self.lambda * pb * (1.0 / (k + self.lambda * pb) + 1.0);
        (0..self.n.len())
            .map(|j| {
                if self.n[j] == 0 {
                    return 0.0;
                }
                let n = self.n[j] as f64;
                let s = sigmoid(v[j]);
                n - (n + k * self.gamma[j]) * s - common * self.gamma[j] * s
            })
            .collect()
    }
}

/// Full conditional of `w = log γ` given the partition, `U` and Λ.
#[derive(Debug, Clone)]
pub struct GammaTarget {
    /// Non-zero counts `n_{j,k}` of each group.
    pub counts: Vec<Vec<usize>>,
    pub k: usize,
    pub u: Vec<f64>,
    pub lambda: f64,
    pub hyper: HyperPriorParams,
}

impl GammaTarget {
    fn log1p_u(&self) -> Vec<f64> {
        self.u.iter().map(|u| u.ln_1p()).collect()
    }

    pub fn log_density(&self, w: &[f64]) -> f64 {
        let k = self.k as f64;
        let l = self.log1p_u();
        let h = &self.hyper;
        let mut t = 0.0;
        let mut s = 0.0;
        for j in 0..w.len() {
            let g = w[j].exp();
            s += g * l[j];
            t += h.a_gamma * w[j] - self.lambda * h.b_gamma * g - k * g * l[j];
            let lg = ln_gamma(g);
            for &c in &self.counts[j] {
                t += ln_gamma(g + c as f64) - lg;
            }
        }
        let pb = (-s).exp();
        t + (k + self.lambda * pb).ln() + self.lambda * pb
    }

    pub fn gradient(&self, w: &[f64]) -> Vec<f64> {
        let k = self.k as f64;
        let l = self.log1p_u();
        let h = &self.hyper;
        let g: Vec<f64> = w.iter().map(|x| x.exp()).collect();
        let pb = (-g.iter().zip(&l).map(|(g, l)| g * l).sum::<f64>()).exp();
        let common = self.lambda * pb * (1.0 / (k + self.lambda * pb) + 1.0);
        (0..w.len())
            .map(|j| {
                let dg = digamma(g[j]);
                let poch: f64 = self.counts[j].iter().map(|&c| digamma(g[j] + c as f64) - dg).sum();
                h.a_gamma - g[j] * (self.lambda * h.b_gamma + k * l[j] - poch + common * l[j])
            })
            .collect()
    }
}

/// One Metropolis-adjusted Langevin step on the coordinates listed in
/// `active`; returns the acceptance probability.
pub fn mala_step<R, F, G>(x: &mut [f64], active: &[usize], h: f64, log_pi: F, grad: G, rng: &mut R) -> (f64, bool)
where
    R: Rng + ?Sized,
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    let h2 = h * h;
    let lp = log_pi(x);
    let gx = grad(x);
    let mut y = x.to_vec();
    for &a in active {
        let z: f64 = StandardNormal.sample(rng);
        y[a] = x[a] + 0.5 * h2 * gx[a] + h * z;
    }
    let lp_y = log_pi(&y);
    let gy = grad(&y);
    if !lp_y.is_finite() || gy.iter().any(|g| !g.is_finite()) {
        return (0.0, false);
    }
    let mut q_fwd = 0.0;
    let mut q_back = 0.0;
    for &a in active {
        let f = y[a] - x[a] - 0.5 * h2 * gx[a];
        let b = x[a] - y[a] - 0.5 * h2 * gy[a];
        q_fwd += f * f;
        q_back += b * b;
    }
    let log_alpha = lp_y - lp + (q_fwd - q_back) / (2.0 * h2);
    let alpha = if log_alpha.is_nan() { 0.0 } else { log_alpha.exp().min(1.0) };
    let accept = rng.random::<f64>() < alpha;
    if accept {
        x.copy_from_slice(&y);
    }
    (alpha, accept)
}

/// Adaptive MALA update of `U`.
pub fn step_u_mala<R: Rng + ?Sized>(state: &mut FranchiseState, adapt: &mut RobbinsMonro, rng: &mut R) -> bool {
    let n: Vec<usize> = state.allocations.iter().map(Vec::len).collect();
    let active: Vec<usize> = (0..n.len()).filter(|&j| n[j] > 0).collect();
    let target = UTarget {
        n,
        k: state.k(),
        gamma: state.gamma.clone(),
        lambda: state.lambda,
    };
    let mut v: Vec<f64> = state
        .u
        .iter()
        .map(|&u| if u > 0.0 { u.ln() } else { 0.0 })
        .collect();
    let (alpha, accept) = mala_step(&mut v, &active, adapt.scale(), |x| target.log_density(x), |x| target.gradient(x), rng);
    adapt.update(alpha);
    if accept {
        for &j in &active {
            state.u[j] = v[j].exp();
        }
    }
    accept
}

/// Adaptive MALA update of γ.
pub fn step_gamma_mala<R: Rng + ?Sized>(
    state: &mut FranchiseState,
    hyper: &HyperPriorParams,
    adapt: &mut RobbinsMonro,
    rng: &mut R,
) -> bool {
    let counts: Vec<Vec<usize>> = state
        .counts()
        .into_iter()
        .map(|row| row.into_iter().filter(|&c| c > 0).collect())
        .collect();
    let target = GammaTarget {
        counts,
        k: state.k(),
        u: state.u.clone(),
        lambda: state.lambda,
        hyper: *hyper,
    };
    let mut w: Vec<f64> = state.gamma.iter().map(|g| g.ln()).collect();
    let active: Vec<usize> = (0..w.len()).collect();
    let (alpha, accept) = mala_step(&mut w, &active, adapt.scale(), |x| target.log_density(x), |x| target.gradient(x), rng);
    adapt.update(alpha);
    if accept {
        state.gamma = w.iter().map(|x| x.exp()).collect();
    }
    accept
}

/// Λ from its gamma-mixture full conditional.
pub fn step_lambda<R: Rng + ?Sized>(
    state: &mut FranchiseState,
    hyper: &HyperPriorParams,
    gamma_random: bool,
    rng: &mut R,
) {
    state.lambda = sample_lambda(state.k(), state.psi_bar(), &state.gamma, hyper, gamma_random, rng);
}

/// Draws `β_j` after drawing each cluster's `(μ, σ²)` from its posterior.
fn step_beta<R: Rng + ?Sized>(
    state: &mut FranchiseState,
    data: &GroupedDataset,
    resid: &GroupedDataset,
    priors: &ModelPriors,
    spec: &crate::likelihood::RegressionSpec,
    rng: &mut R,
) -> Result<GroupedDataset> {
    let tau: Vec<Option<(f64, f64)>> = state
        .clusters
        .iter()
        .map(|c| c.as_ref().map(|c| nig_draw(&nig_posterior(&c.stats, &priors.base), rng)))
        .collect();
    let mut betas = Vec::with_capacity(state.d());
    for j in 0..state.d() {
        let comps: Vec<(f64, f64)> = state.allocations[j]
            .iter()
            .map(|&l| tau[l].expect("allocated slot is active"))
            .collect();
        betas.push(beta_full_conditional_draw(data, j, &comps, spec, rng)?);
    }
    let new_resid = residualize(data, &betas)?;
    state.beta = Some(betas);
    state.rebuild_stats(&new_resid, &priors.base);
    let _ = resid;
    Ok(new_resid)
}

fn record(state: &FranchiseState, iter: usize, base: &NigParams, keep: bool) -> IterationRecord {
    let clusters = if keep {
        state
            .clusters
            .iter()
            .flatten()
            .map(|c| ClusterRecord {
                counts: c.counts.clone(),
                posterior: nig_posterior(&c.stats, base),
            })
            .collect()
    } else {
        Vec::new()
    };
    IterationRecord {
        iter,
        k: state.k(),
        m: None,
        lambda: state.lambda,
        gamma: state.gamma.clone(),
        u: state.u.clone(),
        allocations: state.allocations.clone(),
        components: Vec::new(),
        clusters,
        beta: state
            .beta
            .as_ref()
            .map(|b| b.iter().map(|v| v.iter().copied().collect()).collect()),
    }
}

/// Runs the marginal sampler; deterministic given `config.seed`.
pub fn run(data: &GroupedDataset, config: &SamplerConfig, priors: &ModelPriors) -> Result<ChainOutput> {
    check_data(data, config, priors)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let d = data.d();
    let (lambda, gamma) = priors.initial_values(d)?;
    let labels = initial_partition(data, config, &mut rng);
    let u = data.group_sizes().iter().map(|&n| if n == 0 { 0.0 } else { 1.0 }).collect();
    let mut resid = match &priors.regression {
        Some(spec) => residualize(data, &vec![spec.beta0().clone(); d])?,
        None => data.clone(),
    };
    let mut state = FranchiseState::new(&resid, labels, u, gamma, lambda, &priors.base)?;
    if let Some(spec) = &priors.regression {
        state.beta = Some(vec![spec.beta0().clone(); d]);
    }
    let mut u_adapt = RobbinsMonro::new(0.1, config.targets.mala);
    let mut g_adapt = RobbinsMonro::new(0.1, config.targets.mala);
    let mut u_rate = Rate::default();
    let mut g_rate = Rate::default();
    let mut records = Vec::new();
    let mut moves = 0usize;
    for iter in 0..config.iterations {
        if iter == config.burn_in {
            u_adapt.freeze();
            g_adapt.freeze();
            u_rate.reset();
            g_rate.reset();
        }
        for j in 0..d {
            for i in 0..data.group(j).len() {
                reassign_observation(&mut state, &resid, &priors.base, config.prior_only, j, i, &mut rng);
                moves += 1;
                if cfg!(debug_assertions) && moves % 1000 == 0 {
                    state.check_invariants(&resid);
                }
            }
        }
        state.compact();
        u_rate.record(step_u_mala(&mut state, &mut u_adapt, &mut rng));
        if !config.fix_gamma {
            g_rate.record(step_gamma_mala(&mut state, &priors.hyper, &mut g_adapt, &mut rng));
        }
        if !config.fix_lambda {
            step_lambda(&mut state, &priors.hyper, !config.fix_gamma, &mut rng);
        }
        if let (Some(spec), false) = (&priors.regression, config.prior_only) {
            resid = step_beta(&mut state, data, &resid, priors, spec, &mut rng).map_err(|e| HmfmError::Iteration {
                iteration: iter,
                source: Box::new(e),
            })?;
        }
        if !state.lambda.is_finite() || state.gamma.iter().any(|g| !g.is_finite()) {
            return Err(HmfmError::Iteration {
                iteration: iter,
                source: Box::new(HmfmError::Numerical("non-finite hyperparameter".into())),
            });
        }
        if config.keeps(iter) {
            records.push(record(&state, iter, &priors.base, config.record_components));
        }
    }
    let mut acceptance = vec![("u_mala".to_string(), u_rate.value())];
    if !config.fix_gamma {
        acceptance.push(("gamma_mala".to_string(), g_rate.value()));
    }
    Ok(ChainOutput {
        algorithm: Algorithm::Marginal,
        group_sizes: data.group_sizes(),
        base: priors.base,
        records,
        acceptance,
    })
}
