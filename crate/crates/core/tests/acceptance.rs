//! End-to-end acceptance run. Prints one line per criterion and exits with a
//! non-zero status if any of them fails.
//!
//! Run alone with `cargo test --release --test acceptance`; the timing
//! criterion goes first so that nothing else competes for the CPU.

mod common;

use std::time::Instant;

use common::{counts_of, set_partitions, tv};
use hmfm::harness::{bench, fit, generate_experiment, loglog_slope, ExperimentSpec, RunConfig};
use hmfm::harness::config::BaseRule;
use hmfm::likelihood::{log_marginal, ClusterSuffStats, GroupedDataset, NigParams};
use hmfm::postprocess::ari;
use hmfm::prior::{
    correlation, log_peppf, log_psi_big, prior_k_pmf, prior_simulate, psi_bar, GfcTable,
    HyperPriorParams, VecFdpParams,
};
use hmfm::quadrature::integrate;
use hmfm::sampler::marginal::{GammaTarget, UTarget};
use hmfm::sampler::{self, Algorithm, InitPartition, ModelPriors, SamplerConfig};
use hmfm::special::{ln_factorial, ln_gamma, ln_pochhammer, log_sum_exp};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn main() {
    let criteria: [(usize, &str, fn() -> Outcome); 10] = [
        (9, "scaling", criterion_9),
        (1, "prior calculus exactness", criterion_1),
        (2, "law of K against simulation", criterion_2),
        (3, "correlation", criterion_3),
        (4, "prior reproduction by both samplers", criterion_4),
        (5, "sampler cross-agreement", criterion_5),
        (6, "experiment 1", criterion_6),
        (7, "experiment 2", criterion_7),
        (8, "experiment 3", criterion_8),
        (10, "marginal likelihood and gradients", criterion_10),
    ];
    let mut failed = Vec::new();
    for (id, name, run) in criteria {
        let start = Instant::now();
        let o = run();
        let secs = start.elapsed().as_secs_f64();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {id} {tag}: {name}; {} ({secs:.1} s)", o.detail);
        if !o.pass {
            failed.push(id);
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}

// ---------------------------------------------------------------- criterion 1

fn log_psi_series(k: usize, psi_bar: f64, lambda: f64) -> f64 {
    let mut terms = Vec::new();
    let mut m = 0usize;
    loop {
        let mk = m + k;
        if mk > 0 {
            let log_q = -lambda + (mk as f64 - 1.0) * lambda.ln() - ln_factorial(mk - 1);
            let t = log_q + ln_factorial(mk) - ln_factorial(m) + m as f64 * psi_bar.ln();
            terms.push(t);
            let total = log_sum_exp(&terms);
            if m > 5 && t - total < (1e-12f64).ln() - 10.0 {
                return total;
            }
        }
        m += 1;
    }
}

fn gfc_brute_force(n: usize, k: usize, gamma: f64) -> f64 {
    fn rec(remaining: usize, parts_left: usize, acc: f64, gamma: f64, out: &mut Vec<f64>) {
        if parts_left == 0 {
            if remaining == 0 {
                out.push(acc);
            }
            return;
        }
        for r in 1..=remaining {
            let t = acc - ln_factorial(r) + ln_pochhammer(gamma, r as f64);
            rec(remaining - r, parts_left - 1, t, gamma, out);
        }
    }
    let mut terms = Vec::new();
    rec(n, k, 0.0, gamma, &mut terms);
    log_sum_exp(&terms) + ln_factorial(n) - ln_factorial(k)
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut psi_err: f64 = 0.0;
    for &lambda in &[0.5, 2.0, 10.0] {
        let p = VecFdpParams::new(lambda, vec![rng.random_range(0.1..3.0), rng.random_range(0.1..3.0)]).unwrap();
        for _ in 0..10 {
            let u = [rng.random_range(0.0..5.0), rng.random_range(0.0..5.0)];
            for k in 0..=5 {
                let closed = log_psi_big(k, &u, &p).unwrap();
                let series = log_psi_series(k, psi_bar(&u, p.gamma()), lambda);
                psi_err = psi_err.max((closed - series).exp_m1().abs());
            }
        }
    }
    let mut gfc_err: f64 = 0.0;
    for &gamma in &[0.05, 0.5, 1.0, 2.7] {
        let table = GfcTable::new(10, gamma).unwrap();
        for n in 1..=10 {
            for k in 1..=n {
                gfc_err = gfc_err.max((table.ln_abs(n, k) - gfc_brute_force(n, k, gamma)).abs());
            }
        }
    }
    let group_of = [0, 0, 1, 1];
    let mut norm_err: f64 = 0.0;
    for (lambda, gamma) in [(1.5, vec![0.4, 2.0]), (5.0, vec![0.05, 0.05]), (0.3, vec![3.0, 1.0])] {
        let p = VecFdpParams::new(lambda, gamma).unwrap();
        let total: f64 = set_partitions(4)
            .iter()
            .map(|part| log_peppf(&counts_of(part, &group_of, 2), &p).unwrap().exp())
            .sum();
        norm_err = norm_err.max((total - 1.0).abs());
    }
    outcome(
        psi_err < 1e-10 && gfc_err < 1e-10 && norm_err < 1e-6,
        format!("Ψ rel err {psi_err:.1e}, GFC log err {gfc_err:.1e}, pEPPF mass err {norm_err:.1e}"),
    )
}

// ---------------------------------------------------------------- criterion 2

fn criterion_2() -> Outcome {
    let p = VecFdpParams::new(2.0, vec![1.0, 1.0]).unwrap();
    let exact = prior_k_pmf(&[3, 3], &p).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let draws = 100_000;
    let mut hist = vec![0.0; 7];
    for _ in 0..draws {
        let r = prior_simulate(&p, |_| (), &mut rng);
        let mut all = r.sample_labels(&[3, 3], &mut rng).concat();
        all.sort_unstable();
        all.dedup();
        hist[all.len()] += 1.0 / draws as f64;
    }
    let d = tv(&hist, &exact);
    outcome(d < 0.01, format!("TV {d:.4} over {draws} draws"))
}

// ---------------------------------------------------------------- criterion 3

fn sample_corr(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

fn criterion_3() -> Outcome {
    let mut limit_err: f64 = 0.0;
    for &lambda in &[0.5, 1.0, 5.0, 20.0] {
        let small = correlation(&VecFdpParams::new(lambda, vec![1e-6, 1e-6]).unwrap(), 0, 1).unwrap();
        limit_err = limit_err.max((small - (1.0 - (-lambda as f64).exp()) / lambda).abs());
        let large = correlation(&VecFdpParams::new(lambda, vec![1e4, 1e4]).unwrap(), 0, 1).unwrap();
        limit_err = limit_err.max((large - 1.0).abs());
    }
    let draws = 100_000;
    let mut pass = limit_err < 1e-3;
    let mut parts = vec![format!("limit err {limit_err:.1e}")];
    for (i, (lambda, gamma)) in [(1.0, 1.0), (5.0, 0.5)].into_iter().enumerate() {
        let p = VecFdpParams::new(lambda, vec![gamma, gamma]).unwrap();
        let exact = correlation(&p, 0, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(30 + i as u64);
        let (mut xs, mut ys) = (Vec::with_capacity(draws), Vec::with_capacity(draws));
        for _ in 0..draws {
            let r = prior_simulate(&p, |rng: &mut ChaCha8Rng| rng.random::<f64>(), &mut rng);
            xs.push(r.mass(0, |a| *a < 0.5));
            ys.push(r.mass(1, |a| *a < 0.5));
        }
        let r = sample_corr(&xs, &ys);
        let se = (1.0 - r * r) / (draws as f64).sqrt();
        let z = (r - exact).abs() / se;
        pass &= z < 3.0;
        parts.push(format!("(Λ,γ)=({lambda},{gamma}) exact {exact:.4} MC {r:.4} ({z:.1} SE)"));
    }
    outcome(pass, parts.join(", "))
}

// ---------------------------------------------------------------- criterion 4

fn criterion_4() -> Outcome {
    let params = VecFdpParams::new(2.0, vec![1.0, 1.0]).unwrap();
    let exact = prior_k_pmf(&[3, 3], &params).unwrap();
    let data = GroupedDataset::placeholder(&[3, 3]);
    let mut priors = ModelPriors::new(
        NigParams::new(0.0, 0.5, 4.0, 1.0).unwrap(),
        HyperPriorParams::new(1.0, 1.0, 2.0, 1.0).unwrap(),
    );
    priors.lambda_init = Some(2.0);
    priors.gamma_init = Some(vec![1.0, 1.0]);
    let cfg = SamplerConfig {
        iterations: 201_000,
        burn_in: 1_000,
        seed: 4,
        prior_only: true,
        fix_lambda: true,
        fix_gamma: true,
        init: InitPartition::OneCluster,
        record_components: false,
        ..SamplerConfig::default()
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for algo in [Algorithm::Conditional, Algorithm::Marginal] {
        let out = sampler::run(algo, &data, &cfg, &priors).unwrap();
        let d = tv(&out.k_pmf(6), &exact);
        pass &= d < 0.02;
        parts.push(format!("{algo} TV {d:.4}"));
    }
    outcome(pass, parts.join(", "))
}

// ---------------------------------------------------------------- criterion 5

fn paper_config(algorithm: Algorithm, preset: (f64, f64, f64), iterations: usize, burn_in: usize, seed: u64) -> RunConfig {
    RunConfig {
        algorithm,
        iterations,
        burn_in,
        thin: 5,
        seed,
        lambda0: Some(preset.0),
        v_lambda: Some(preset.1),
        gamma0: Some(preset.2),
        record_components: false,
        ..RunConfig::default()
    }
}

fn criterion_5() -> Outcome {
    let exp = generate_experiment(&ExperimentSpec { id: 2, n: Some(100), seed: 5 }).unwrap();
    let run = |algo| {
        let cfg = RunConfig {
            thin: 2,
            ..paper_config(algo, (10.0, 2.0, 0.01), 110_000, 10_000, 5)
        };
        fit(&exp.data, &cfg).unwrap()
    };
    let a = run(Algorithm::Conditional);
    let b = run(Algorithm::Marginal);
    let sim = a.similarity.max_abs_diff(&b.similarity).unwrap();
    let d = tv(&a.chains[0].k_pmf(40), &b.chains[0].k_pmf(40));
    outcome(
        sim < 0.05 && d < 0.03,
        format!("max similarity diff {sim:.4}, TV on K {d:.4}"),
    )
}

// ---------------------------------------------------------------- criterion 6

fn distinct(labels: &[usize]) -> usize {
    let mut v = labels.to_vec();
    v.sort_unstable();
    v.dedup();
    v.len()
}

fn criterion_6() -> Outcome {
    let reps = 10;
    let (mut ari_sum, mut hmfm_split, mut mfm_split) = (0.0, 0, 0);
    for rep in 0..reps {
        let seed = 600 + rep as u64;
        let exp = generate_experiment(&ExperimentSpec { id: 1, n: None, seed }).unwrap();
        let cfg = paper_config(Algorithm::Conditional, (5.0, 5.0, 0.5), 20_000, 10_000, seed);
        let est = fit(&exp.data, &cfg).unwrap().partition;
        ari_sum += ari(&exp.truth[0], est.group(0)).unwrap();
        hmfm_split += (distinct(est.group(1)) >= 2) as usize;

        // independent analysis of group 2 with the same base measure
        let base = RunConfig::default().base_measure(&exp.data).unwrap();
        let single = GroupedDataset::new(vec![exp.data.group(1).to_vec()]).unwrap();
        let mfm = RunConfig {
            base: BaseRule::Fixed,
            mu0: Some(base.mu0),
            k0: Some(base.k0),
            ..paper_config(Algorithm::Conditional, (1.0, 1.0, 1.0), 20_000, 10_000, seed)
        };
        let mfm = RunConfig {
            lambda0: None,
            v_lambda: None,
            gamma0: None,
            ..mfm
        };
        let est = fit(&single, &mfm).unwrap().partition;
        mfm_split += (distinct(est.group(0)) >= 2) as usize;
    }
    let mean_ari = ari_sum / reps as f64;
    outcome(
        mean_ari >= 0.9 && hmfm_split * 10 >= 3 * reps && mfm_split * 10 <= reps,
        format!("mean group-1 ARI {mean_ari:.3}; group 2 split by HMFM in {hmfm_split}/{reps}, by MFM in {mfm_split}/{reps}"),
    )
}

// ---------------------------------------------------------------- criterion 7

fn criterion_7() -> Outcome {
    let reps = 10;
    let mut pass = true;
    let mut parts = Vec::new();
    for algo in [Algorithm::Conditional, Algorithm::Marginal] {
        let mut sum = 0.0;
        for rep in 0..reps {
            let seed = 700 + rep as u64;
            let exp = generate_experiment(&ExperimentSpec { id: 2, n: Some(200), seed }).unwrap();
            let cfg = paper_config(algo, (10.0, 2.0, 0.01), 10_000, 5_000, seed);
            let est = fit(&exp.data, &cfg).unwrap().partition;
            sum += ari(&exp.truth.concat(), &est.labels).unwrap();
        }
        let mean = sum / reps as f64;
        pass &= mean >= 0.95;
        parts.push(format!("{algo} mean ARI {mean:.3}"));
    }
    outcome(pass, parts.join(", "))
}

// ---------------------------------------------------------------- criterion 8

// Global ARI of the Bayes classifier that knows every group's true mixture.
fn oracle_ari(exp: &hmfm::harness::Experiment) -> f64 {
    let predicted: Vec<usize> = exp
        .data
        .groups()
        .iter()
        .zip(&exp.densities)
        .flat_map(|(obs, mix)| {
            obs.iter().map(move |o| {
                let y = o.marks[0];
                let score = |c: usize| {
                    mix.weights[c] * (-(y - mix.means[c]).powi(2) / (2.0 * mix.variances[c])).exp()
                        / mix.variances[c].sqrt()
                };
                let best = (0..mix.weights.len()).max_by(|&a, &b| score(a).total_cmp(&score(b))).unwrap();
                mix.components[best]
            })
        })
        .collect();
    ari(&exp.truth.concat(), &predicted).unwrap()
}

fn criterion_8() -> Outcome {
    let reps = 5;
    let (mut sum, mut oracle) = (0.0, 0.0);
    let mut shown = Vec::new();
    for rep in 0..reps {
        let seed = 800 + rep as u64;
        let exp = generate_experiment(&ExperimentSpec { id: 3, n: None, seed }).unwrap();
        let cfg = paper_config(Algorithm::Conditional, (15.0, 3.0, 0.05), 10_000, 5_000, seed);
        let est = fit(&exp.data, &cfg).unwrap().partition;
        let a = ari(&exp.truth.concat(), &est.labels).unwrap();
        sum += a;
        oracle += oracle_ari(&exp);
        shown.push(format!("{a:.3}"));
    }
    let mean = sum / reps as f64;
    outcome(
        mean >= 0.7,
        format!(
            "mean global ARI {mean:.3} [{}]; known-density classifier reaches {:.3}",
            shown.join(", "),
            oracle / reps as f64
        ),
    )
}

// ---------------------------------------------------------------- criterion 9

fn criterion_9() -> Outcome {
    let sizes = [100, 200, 400, 800, 1600];
    let rows = bench(&sizes, 500, 9).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for algo in [Algorithm::Conditional, Algorithm::Marginal] {
        let (x, y): (Vec<f64>, Vec<f64>) = rows
            .iter()
            .filter(|r| r.algorithm == algo)
            .map(|r| (r.n as f64, r.seconds_per_iter))
            .unzip();
        let slope = loglog_slope(&x, &y).unwrap();
        pass &= slope <= 1.3;
        parts.push(format!("{algo} slope {slope:.3} ({:.2} ms/iter at n=1600)", y[y.len() - 1] * 1e3));
    }
    outcome(pass, parts.join(", "))
}

// --------------------------------------------------------------- criterion 10

// ∫∫ ∏ N(y | μ, σ²) NIG(μ, σ²) dμ dσ² by nested adaptive quadrature over μ
// and s = log σ², scaled by exp(-reference) to stay in range.
fn quadrature_marginal(ys: &[f64], p: &NigParams, reference: f64) -> f64 {
    let n = ys.len() as f64;
    let a = 0.5 * p.nu0;
    let b = 0.5 * p.nu0 * p.sigma0_sq;
    let kn = p.k0 + n;
    let mu_n = (p.k0 * p.mu0 + ys.iter().sum::<f64>()) / kn;
    let log_ig = |s: f64| a * b.ln() - ln_gamma(a) - (a + 1.0) * s - b * (-s).exp();
    let inner = |s: f64| {
        let var = s.exp();
        let f = |mu: f64| {
            let ll: f64 = ys
                .iter()
                .map(|y| -0.5 * (2.0 * std::f64::consts::PI * var).ln() - 0.5 * (y - mu).powi(2) / var)
                .sum();
            let lp = -0.5 * (2.0 * std::f64::consts::PI * var / p.k0).ln() - 0.5 * p.k0 * (mu - p.mu0).powi(2) / var;
            (ll + lp + log_ig(s) + s - reference).exp()
        };
        let half = 14.0 * (var / kn).sqrt();
        integrate(f, mu_n - half, mu_n + half, 1e-18, 1e-12).unwrap().value
    };
    // the law of s has a doubly exponential left tail and an e^{-(a+n/2)s} right tail
    let centre = (b + 0.5 * ys.iter().map(|y| (y - mu_n).powi(2)).sum::<f64>()).ln() - (a + 0.5 * n).ln();
    let lo = centre - 8.0;
    let hi = centre + 45.0 / (a + 0.5 * n);
    let panels = 80;
    let w = (hi - lo) / panels as f64;
    (0..panels)
        .map(|i| {
            let l = lo + i as f64 * w;
            integrate(inner, l, l + w, 1e-16, 1e-12).unwrap().value
        })
        .sum()
}

fn central<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], a: usize) -> f64 {
    let h = 1e-6;
    let mut p = x.to_vec();
    let mut m = x.to_vec();
    p[a] += h;
    m[a] -= h;
    (f(&p) - f(&m)) / (2.0 * h)
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut nig_err: f64 = 0.0;
    for _ in 0..20 {
        let p = NigParams::new(
            rng.random_range(-3.0..3.0),
            rng.random_range(0.05..5.0),
            rng.random_range(1.0..10.0),
            rng.random_range(0.1..3.0),
        )
        .unwrap();
        let n = rng.random_range(1..30);
        let centre = rng.random_range(-5.0..5.0);
        let spread = rng.random_range(0.1..2.0);
        let ys: Vec<f64> = (0..n).map(|_| centre + spread * rng.random_range(-1.7..1.7)).collect();
        let closed = log_marginal(&ClusterSuffStats::from_values(&ys), &p);
        let ratio = quadrature_marginal(&ys, &p, closed);
        nig_err = nig_err.max((ratio - 1.0).abs());
    }

    let hyper = HyperPriorParams::new(3.0, 2.0, 4.0, 0.5).unwrap();
    let mut grad_err: f64 = 0.0;
    for _ in 0..20 {
        let d = rng.random_range(1..4);
        let n: Vec<usize> = (0..d).map(|_| rng.random_range(0..40)).collect();
        let gamma: Vec<f64> = (0..d).map(|_| rng.random_range(0.05..5.0)).collect();
        let k = rng.random_range(1..8);
        let lambda = rng.random_range(0.1..20.0);
        let ut = UTarget { n, k, gamma, lambda };
        let v: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
        let g = ut.gradient(&v);
        for a in 0..d {
            grad_err = grad_err.max(rel_err(g[a], central(|x| ut.log_density(x), &v, a)));
        }
        let counts: Vec<Vec<usize>> = (0..d).map(|_| (0..k).map(|_| rng.random_range(0..6)).collect()).collect();
        let u: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..10.0)).collect();
        let gt = GammaTarget { counts, k, u, lambda, hyper };
        let w: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..1.5)).collect();
        let g = gt.gradient(&w);
        for a in 0..d {
            grad_err = grad_err.max(rel_err(g[a], central(|x| gt.log_density(x), &w, a)));
        }
    }
    outcome(
        nig_err < 1e-6 && grad_err < 1e-5,
        format!("NIG marginal rel err {nig_err:.1e}, MALA gradient rel err {grad_err:.1e}"),
    )
}
