//! Blocked Gibbs sampler that keeps the `M` components, their weights
//! `S_{j,m}` and the auxiliary variables `U_j` in the state.
//!
//! One sweep visits, in order: Λ (with `M` and the empty components
//! integrated out), the number of empty components `M*` (weights and `U`
//! integrated out), γ (same), a fresh `U` given the partition, the component
//! parameters τ, the regression coefficients, the weights `S`, `U` given `S`,
//! and finally the allocations. Every block that is integrated out in one
//! step is redrawn before a later step conditions on it, so the sweep leaves
//! the joint posterior invariant.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::common::{
    check_data, initial_partition, sample_lambda, sample_log_gamma, ChainOutput, ComponentRecord,
    IterationRecord, ModelPriors, Rate, RobbinsMonro, SamplerConfig,
};
use super::Algorithm;
use crate::error::{HmfmError, Result};
use crate::likelihood::{
    beta_full_conditional_draw, nig_draw, nig_posterior, residualize, ClusterSuffStats,
    GroupedDataset, NigParams, Observation,
};
use crate::prior::HyperPriorParams;
use crate::special::{ln_gamma, log_sum_exp, sample_log_categorical};

/// Full state of the conditional sampler.
#[derive(Debug, Clone)]
pub struct ChainState {
    /// Component label of every observation; allocated components are `0..k`.
    pub allocations: Vec<Vec<usize>>,
    pub k: usize,
    /// `(μ_m, σ²_m)` for all `M` components.
    pub tau: Vec<(f64, f64)>,
    /// `log S_{j,m}`, `d × M`.
    pub log_s: Vec<Vec<f64>>,
    pub u: Vec<f64>,
    pub lambda: f64,
    pub gamma: Vec<f64>,
    pub beta: Option<Vec<DVector<f64>>>,
}

impl ChainState {
    pub fn m(&self) -> usize {
        self.tau.len()
    }

    pub fn d(&self) -> usize {
        self.gamma.len()
    }

    /// `n_{j,k}` for the `k` allocated components.
    pub fn counts(&self) -> Vec<Vec<usize>> {
        self.allocations
            .iter()
            .map(|g| {
                let mut c = vec![0usize; self.k];
                for &l in g {
                    c[l] += 1;
                }
                c
            })
            .collect()
    }

    pub fn psi_bar(&self) -> f64 {
        crate::prior::psi_bar(&self.u, &self.gamma)
    }

    fn resize(&mut self, m: usize) {
        self.tau.resize(m, (0.0, 1.0));
        for row in &mut self.log_s {
            row.resize(m, 0.0);
        }
    }

    /// Panics if the bookkeeping is inconsistent.
    pub fn check_invariants(&self) {
        let m = self.m();
        assert!(self.k <= m, "K = {} exceeds M = {m}", self.k);
        let mut used = vec![false; self.k];
        for g in &self.allocations {
            for &l in g {
                assert!(l < self.k, "label {l} not below K = {}", self.k);
                used[l] = true;
            }
        }
        assert!(used.iter().all(|&u| u), "an allocated component is empty");
        assert!(self.log_s.iter().all(|r| r.len() == m));
        assert!(self.lambda > 0.0 && self.gamma.iter().all(|g| *g > 0.0));
        assert!(self.u.iter().all(|u| *u >= 0.0 && u.is_finite()));
    }
}

fn gauss_ll(obs: &Observation, mu: f64, s2: f64) -> f64 {
    let h = obs.marks.len() as f64;
    let ss: f64 = obs.marks.iter().map(|y| (y - mu) * (y - mu)).sum();
    -0.5 * h * (2.0 * std::f64::consts::PI * s2).ln() - 0.5 * ss / s2
}

/// Resamples every allocation with `P(c = m) ∝ S_{j,m} f(y | τ_m)` and
/// relabels so the allocated components come first, in order of first use.
pub fn step_allocations<R: Rng + ?Sized>(
    state: &mut ChainState,
    data: &GroupedDataset,
    prior_only: bool,
    rng: &mut R,
) {
    let m = state.m();
    let mut lw = vec![0.0; m];
    for (j, group) in data.groups().iter().enumerate() {
        for (i, obs) in group.iter().enumerate() {
            for (slot, (ls, &(mu, s2))) in lw.iter_mut().zip(state.log_s[j].iter().zip(&state.tau)) {
                *slot = if prior_only { *ls } else { ls + gauss_ll(obs, mu, s2) };
            }
            state.allocations[j][i] = sample_log_categorical(&lw, rng);
        }
    }
    relabel(state);
}

fn relabel(state: &mut ChainState) {
    let m = state.m();
    let mut map = vec![usize::MAX; m];
    let mut order = Vec::with_capacity(m);
    for g in &state.allocations {
        for &l in g {
            if map[l] == usize::MAX {
                map[l] = order.len();
                order.push(l);
            }
        }
    }
    state.k = order.len();
    for (l, slot) in map.iter_mut().enumerate() {
        if *slot == usize::MAX {
            *slot = order.len();
            order.push(l);
        }
    }
    for g in &mut state.allocations {
        for l in g.iter_mut() {
            *l = map[*l];
        }
    }
    state.tau = order.iter().map(|&l| state.tau[l]).collect();
    for row in &mut state.log_s {
        *row = order.iter().map(|&l| row[l]).collect();
    }
}

/// Allocated τ_k from the NIG posterior of their pooled members; empty
/// components from the base measure.
pub fn step_tau<R: Rng + ?Sized>(
    state: &mut ChainState,
    data: &GroupedDataset,
    base: &NigParams,
    prior_only: bool,
    rng: &mut R,
) {
    let mut stats = vec![ClusterSuffStats::default(); state.k];
    if !prior_only {
        for (group, labels) in data.groups().iter().zip(&state.allocations) {
            for (obs, &l) in group.iter().zip(labels) {
                stats[l].add_obs(obs);
            }
        }
    }
    for (m, slot) in state.tau.iter_mut().enumerate() {
        let post = if m < state.k {
            nig_posterior(&stats[m], base)
        } else {
            *base
        };
        *slot = nig_draw(&post, rng);
    }
}

/// `S_{j,m} ~ Gamma(γ_j + n_{j,m}, U_j + 1)`.
pub fn step_s<R: Rng + ?Sized>(state: &mut ChainState, rng: &mut R) {
    let counts = state.counts();
    for j in 0..state.d() {
        let rate_ln = state.u[j].ln_1p();
        let g = state.gamma[j];
        for m in 0..state.m() {
            let n = if m < state.k { counts[j][m] } else { 0 };
            state.log_s[j][m] = sample_log_gamma(g + n as f64, rng) - rate_ln;
        }
    }
}

/// `U_j ~ Gamma(n_j, T_j)` with `T_j = Σ_m S_{j,m}`.
pub fn step_u<R: Rng + ?Sized>(state: &mut ChainState, rng: &mut R) {
    for j in 0..state.d() {
        let n = state.allocations[j].len();
        state.u[j] = if n == 0 {
            0.0
        } else {
            let log_t = log_sum_exp(&state.log_s[j]);
            (sample_log_gamma(n as f64, rng) - log_t).min(700.0).exp()
        };
    }
}

/// `U_j` given the partition and `M` with the weights integrated out:
/// `U_j / (1 + U_j) ~ Beta(n_j, M γ_j)`.
pub fn refresh_u<R: Rng + ?Sized>(state: &mut ChainState, rng: &mut R) {
    let m = state.m() as f64;
    for j in 0..state.d() {
        let n = state.allocations[j].len();
        state.u[j] = if n == 0 {
            0.0
        } else {
            let a = sample_log_gamma(n as f64, rng);
            let b = sample_log_gamma(m * state.gamma[j], rng);
            (a - b).clamp(-700.0, 700.0).exp()
        };
    }
}

/// Λ from its gamma-mixture full conditional.
pub fn step_lambda<R: Rng + ?Sized>(
    state: &mut ChainState,
    hyper: &HyperPriorParams,
    gamma_random: bool,
    rng: &mut R,
) {
    state.lambda = sample_lambda(state.k, state.psi_bar(), &state.gamma, hyper, gamma_random, rng);
}

/// Adaptive random-walk Metropolis update of the number of empty components.
#[derive(Debug, Clone)]
pub struct MStep {
    pub adapt: RobbinsMonro,
    pub cap: usize,
    rate: Rate,
    warned: bool,
}

impl MStep {
    pub fn new(cap: usize, target: f64) -> Self {
        MStep {
            adapt: RobbinsMonro::new(2.0, target),
            cap,
            rate: Rate::default(),
            warned: false,
        }
    }

    pub fn acceptance(&self) -> f64 {
        self.rate.value()
    }
}

/// Log of the target of `M*` given `K`, Λ, γ and the group sizes:
/// `log(m*+K) - log m*! + m* log Λ + Σ_j [lnΓ(γ_j(m*+K)) - lnΓ(γ_j(m*+K)+n_j)]`.
pub fn log_target_m_star(m_star: usize, k: usize, lambda: f64, gamma: &[f64], n: &[usize]) -> f64 {
    let mk = (m_star + k) as f64;
    let mut t = mk.ln() - ln_gamma(m_star as f64 + 1.0) + m_star as f64 * lambda.ln();
    for (&g, &nj) in gamma.iter().zip(n) {
        if nj > 0 {
            t += ln_gamma(g * mk) - ln_gamma(g * mk + nj as f64);
        }
    }
    t
}

pub fn step_m<R: Rng + ?Sized>(state: &mut ChainState, mh: &mut MStep, rng: &mut R) {
    let n: Vec<usize> = state.allocations.iter().map(Vec::len).collect();
    let current = state.m() - state.k;
    let z: f64 = StandardNormal.sample(rng);
    let step = (z * mh.adapt.scale()).round();
    let proposal = current as f64 + step;
    let alpha = if proposal < 0.0 {
        0.0
    } else if proposal > mh.cap as f64 {
        if !mh.warned {
            log::warn!("proposal for the number of empty components exceeds the cap {}", mh.cap);
            mh.warned = true;
        }
        0.0
    } else {
        let p = proposal as usize;
        let lt = |m| log_target_m_star(m, state.k, state.lambda, &state.gamma, &n);
        (lt(p) - lt(current)).exp().min(1.0)
    };
    let accept = rng.random::<f64>() < alpha;
    mh.adapt.update(alpha);
    mh.rate.record(accept);
    if accept {
        state.resize(state.k + proposal as usize);
    }
}

/// Log-scale random-walk Metropolis updates of each γ_j with the weights
/// integrated out.
#[derive(Debug, Clone)]
pub struct GammaStep {
    pub adapt: Vec<RobbinsMonro>,
    rate: Rate,
}

impl GammaStep {
    pub fn new(d: usize, target: f64) -> Self {
        GammaStep {
            adapt: vec![RobbinsMonro::new(0.5, target); d],
            rate: Rate::default(),
        }
    }

    pub fn acceptance(&self) -> f64 {
        self.rate.value()
    }
}

/// Log target of `w = log γ_j` (Jacobian included) given `M`, the group's
/// counts `n_{j,k}` over allocated components and Λ.
pub fn log_target_gamma(g: f64, m: usize, counts: &[usize], lambda: f64, hyper: &HyperPriorParams) -> f64 {
    let n: usize = counts.iter().sum();
    let mut t = hyper.a_gamma * g.ln() - lambda * hyper.b_gamma * g;
    if n > 0 {
        let mg = m as f64 * g;
        t += ln_gamma(mg) - ln_gamma(mg + n as f64);
        let lg = ln_gamma(g);
        for &c in counts.iter().filter(|&&c| c > 0) {
            t += ln_gamma(g + c as f64) - lg;
        }
    }
    t
}

pub fn step_gamma<R: Rng + ?Sized>(
    state: &mut ChainState,
    hyper: &HyperPriorParams,
    mh: &mut GammaStep,
    rng: &mut R,
) {
    let counts = state.counts();
    let m = state.m();
    for j in 0..state.d() {
        let g = state.gamma[j];
        let z: f64 = StandardNormal.sample(rng);
        let prop = (g.ln() + mh.adapt[j].scale() * z).exp();
        let alpha = if prop > 0.0 && prop.is_finite() {
            let diff = log_target_gamma(prop, m, &counts[j], state.lambda, hyper)
                - log_target_gamma(g, m, &counts[j], state.lambda, hyper);
            if diff.is_nan() {
                0.0
            } else {
                diff.exp().min(1.0)
            }
        } else {
            0.0
        };
        let accept = rng.random::<f64>() < alpha;
        mh.adapt[j].update(alpha);
        mh.rate.record(accept);
        if accept {
            state.gamma[j] = prop;
        }
    }
}

/// Draws each `β_j` given the allocations and component parameters.
pub fn step_beta<R: Rng + ?Sized>(
    state: &mut ChainState,
    data: &GroupedDataset,
    spec: &crate::likelihood::RegressionSpec,
    rng: &mut R,
) -> Result<()> {
    let mut betas = Vec::with_capacity(state.d());
    for j in 0..state.d() {
        let comps: Vec<(f64, f64)> = state.allocations[j].iter().map(|&l| state.tau[l]).collect();
        betas.push(beta_full_conditional_draw(data, j, &comps, spec, rng)?);
    }
    state.beta = Some(betas);
    Ok(())
}

/// Builds the starting state: the initial partition, `M = K + 1`, τ and `S`
/// drawn from their full conditionals.
pub fn initial_state<R: Rng + ?Sized>(
    data: &GroupedDataset,
    config: &SamplerConfig,
    priors: &ModelPriors,
    rng: &mut R,
) -> Result<ChainState> {
    let d = data.d();
    let (lambda, gamma) = priors.initial_values(d)?;
    let allocations = initial_partition(data, config, rng);
    let k = allocations.iter().flatten().map(|l| l + 1).max().unwrap_or(1);
    let beta = priors
        .regression
        .as_ref()
        .map(|spec| vec![spec.beta0().clone(); d]);
    let mut state = ChainState {
        allocations,
        k,
        tau: vec![(0.0, 1.0); k + 1],
        log_s: vec![vec![0.0; k + 1]; d],
        u: data.group_sizes().iter().map(|&n| if n == 0 { 0.0 } else { 1.0 }).collect(),
        lambda,
        gamma,
        beta,
    };
    relabel(&mut state);
    let resid = current_data(data, &state)?;
    step_tau(&mut state, &resid, &priors.base, config.prior_only, rng);
    refresh_u(&mut state, rng);
    step_s(&mut state, rng);
    Ok(state)
}

fn current_data(data: &GroupedDataset, state: &ChainState) -> Result<GroupedDataset> {
    match &state.beta {
        Some(b) => residualize(data, b),
        None => Ok(data.clone()),
    }
}

/// One full sweep.
pub struct Sweeper<'a> {
    pub data: &'a GroupedDataset,
    pub config: &'a SamplerConfig,
    pub priors: &'a ModelPriors,
    pub m_step: MStep,
    pub gamma_step: GammaStep,
    resid: GroupedDataset,
}

impl<'a> Sweeper<'a> {
    pub fn new(
        data: &'a GroupedDataset,
        config: &'a SamplerConfig,
        priors: &'a ModelPriors,
        state: &ChainState,
    ) -> Result<Self> {
        Ok(Sweeper {
            data,
            config,
            priors,
            m_step: MStep::new(config.m_star_cap, config.targets.m_star),
            gamma_step: GammaStep::new(data.d(), config.targets.gamma),
            resid: current_data(data, state)?,
        })
    }

    pub fn sweep<R: Rng + ?Sized>(&mut self, state: &mut ChainState, rng: &mut R) -> Result<()> {
        let cfg = self.config;
        if !cfg.fix_lambda {
            step_lambda(state, &self.priors.hyper, !cfg.fix_gamma, rng);
        }
        step_m(state, &mut self.m_step, rng);
        if !cfg.fix_gamma {
            step_gamma(state, &self.priors.hyper, &mut self.gamma_step, rng);
        }
        refresh_u(state, rng);
        step_tau(state, &self.resid, &self.priors.base, cfg.prior_only, rng);
        if let Some(spec) = &self.priors.regression {
            if !cfg.prior_only {
                step_beta(state, self.data, spec, rng)?;
                self.resid = current_data(self.data, state)?;
            }
        }
        step_s(state, rng);
        step_u(state, rng);
        step_allocations(state, &self.resid, cfg.prior_only, rng);
        if state.lambda.is_nan() || state.gamma.iter().any(|g| g.is_nan()) {
            return Err(HmfmError::Numerical("non-finite hyperparameter".into()));
        }
        #[cfg(debug_assertions)]
        state.check_invariants();
        Ok(())
    }

    pub fn freeze_adaptation(&mut self) {
        self.m_step.adapt.freeze();
        for a in &mut self.gamma_step.adapt {
            a.freeze();
        }
        self.m_step.rate.reset();
        self.gamma_step.rate.reset();
    }
}

fn record(state: &ChainState, iter: usize, keep_components: bool) -> IterationRecord {
    let components = if keep_components {
        (0..state.m())
            .map(|m| ComponentRecord {
                mu: state.tau[m].0,
                sigma2: state.tau[m].1,
                s: state.log_s.iter().map(|row| row[m].exp()).collect(),
            })
            .collect()
    } else {
        Vec::new()
    };
    IterationRecord {
        iter,
        k: state.k,
        m: Some(state.m()),
        lambda: state.lambda,
        gamma: state.gamma.clone(),
        u: state.u.clone(),
        allocations: state.allocations.clone(),
        components,
        clusters: Vec::new(),
        beta: state
            .beta
            .as_ref()
            .map(|b| b.iter().map(|v| v.iter().copied().collect()).collect()),
    }
}

/// Runs the conditional sampler; deterministic given `config.seed`.
pub fn run(data: &GroupedDataset, config: &SamplerConfig, priors: &ModelPriors) -> Result<ChainOutput> {
    check_data(data, config, priors)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut state = initial_state(data, config, priors, &mut rng)?;
    let mut sweeper = Sweeper::new(data, config, priors, &state)?;
    let mut records = Vec::new();
    for iter in 0..config.iterations {
        if iter == config.burn_in {
            sweeper.freeze_adaptation();
        }
        sweeper
            .sweep(&mut state, &mut rng)
            .map_err(|e| HmfmError::Iteration {
                iteration: iter,
                source: Box::new(e),
            })?;
        if config.keeps(iter) {
            records.push(record(&state, iter, config.record_components));
        }
    }
    let mut acceptance = vec![("m_star".to_string(), sweeper.m_step.acceptance())];
    if !config.fix_gamma {
        acceptance.push(("gamma".to_string(), sweeper.gamma_step.acceptance()));
    }
    Ok(ChainOutput {
        algorithm: Algorithm::Conditional,
        group_sizes: data.group_sizes(),
        base: priors.base,
        records,
        acceptance,
    })
}
