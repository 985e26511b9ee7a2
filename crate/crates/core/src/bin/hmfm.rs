use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hmfm::harness::{self, output, ExperimentSpec, RunConfig};
use hmfm::postprocess::{ari, cce, predictive_score, SimilarityMatrix};
use hmfm::prior::{self, ElicitationSpec, GroupCounts, VecFdpParams};
use hmfm::sampler::Algorithm;
use hmfm::{HmfmError, Result};

// println! panics when stdout closes early (`hmfm metrics ... | head`); stop quietly instead
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write;
        if let Err(e) = writeln!(std::io::stdout().lock(), $($arg)*) {
            if e.kind() == std::io::ErrorKind::BrokenPipe {
                std::process::exit(0);
            }
            return Err(e.into());
        }
    }};
}


#[derive(Parser)]
#[command(name = "hmfm", version, about = "Hierarchical mixtures of finite mixtures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run MCMC on a CSV dataset and write chain files and summaries.
    Fit(FitArgs),
    /// Evaluate prior quantities and print them as CSV.
    Prior {
        #[command(subcommand)]
        quantity: PriorQuantity,
    },
    /// Hyperprior parameters from a prior mean and variance of Λ and a guess for γ.
    Elicit {
        #[arg(long)]
        lambda0: f64,
        #[arg(long)]
        vlambda: f64,
        #[arg(long)]
        gamma0: f64,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 2)]
        digits: usize,
    },
    /// Draw a dataset from one of the simulated designs.
    Simulate {
        #[arg(long)]
        experiment: u8,
        /// Per-group size (designs 1, 3) or total size (design 2).
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare a fit directory with a simulated truth directory.
    Metrics {
        #[arg(long)]
        fit: PathBuf,
        #[arg(long)]
        truth: PathBuf,
    },
    /// Time both samplers over increasing sample sizes.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "100,200,400,800,1600")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 200)]
        iters: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    algo: Option<Algorithm>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    burnin: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    chains: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    prior_only: bool,
    #[arg(long)]
    fix_lambda: bool,
    #[arg(long)]
    fix_gamma: bool,
}

#[derive(Args)]
struct ProcessArgs {
    #[arg(long)]
    lambda: f64,
    /// One value per group, or a single value shared by all groups.
    #[arg(long, value_delimiter = ',')]
    gamma: Vec<f64>,
}

impl ProcessArgs {
    fn params(&self, d: usize) -> Result<VecFdpParams> {
        match self.gamma.len() {
            1 => VecFdpParams::symmetric(self.lambda, self.gamma[0], d),
            _ => VecFdpParams::new(self.lambda, self.gamma.clone()),
        }
    }
}

#[derive(Subcommand)]
enum PriorQuantity {
    /// Prior pmf of the number of clusters, as `k,probability` lines.
    Kprior {
        #[arg(long, value_delimiter = ',')]
        n: Vec<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[command(flatten)]
        process: ProcessArgs,
    },
    /// Log pEPPF of a table of counts, groups separated by ';'.
    Peppf {
        #[arg(long)]
        counts: String,
        #[command(flatten)]
        process: ProcessArgs,
    },
    /// Correlation of P_j(A) and P_l(A).
    Corr {
        #[arg(long, default_value_t = 1)]
        j: usize,
        #[arg(long, default_value_t = 2)]
        l: usize,
        #[command(flatten)]
        process: ProcessArgs,
    },
    /// Cov(P_j(A), P_l(B)) from P0(A), P0(B) and P0(A∩B).
    Cov {
        #[arg(long, default_value_t = 1)]
        j: usize,
        #[arg(long, default_value_t = 2)]
        l: usize,
        #[arg(long)]
        pa: f64,
        #[arg(long)]
        pb: f64,
        #[arg(long)]
        pab: f64,
        #[command(flatten)]
        process: ProcessArgs,
    },
    /// E[P_1(A)^nj P_2(A)^nl].
    Moment {
        #[arg(long)]
        nj: usize,
        #[arg(long)]
        nl: usize,
        #[arg(long)]
        p: f64,
        #[command(flatten)]
        process: ProcessArgs,
    },
    /// Coskewness of P_1(A) and P_2(A).
    Coskew {
        #[arg(long)]
        p: f64,
        #[command(flatten)]
        process: ProcessArgs,
    },
}

fn parse_counts(s: &str) -> Result<GroupCounts> {
    let rows = s
        .split(';')
        .map(|g| {
            g.split(',')
                .map(|c| c.trim().parse::<usize>().map_err(|e| HmfmError::Config(format!("bad count '{c}': {e}"))))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    GroupCounts::new(rows)
}

fn group_index(j: usize) -> Result<usize> {
    j.checked_sub(1).ok_or_else(|| HmfmError::Config("groups are numbered from 1".into()))
}

fn run_prior(q: PriorQuantity) -> Result<()> {
    match q {
        PriorQuantity::Kprior { n, k, process } => {
            let params = process.params(n.len())?;
            match k {
                Some(k) => out!("{k},{:.6}", prior::prior_k(&n, &params, k)?),
                None => {
                    let pmf = prior::prior_k_pmf(&n, &params)?;
                    let last = pmf.iter().rposition(|p| *p > 0.0).unwrap_or(0);
                    for (k, p) in pmf.iter().enumerate().take(last + 1).skip(1) {
                        out!("{k},{p:.6}");
                    }
                }
            }
        }
        PriorQuantity::Peppf { counts, process } => {
            let counts = parse_counts(&counts)?;
            let params = process.params(counts.d())?;
            out!("log_peppf,{}", prior::log_peppf(&counts, &params)?);
        }
        PriorQuantity::Corr { j, l, process } => {
            let params = process.params(2.max(j).max(l))?;
            out!("corr,{}", prior::correlation(&params, group_index(j)?, group_index(l)?)?);
        }
        PriorQuantity::Cov { j, l, pa, pb, pab, process } => {
            let params = process.params(2.max(j).max(l))?;
            out!("cov,{}", prior::covariance(&params, group_index(j)?, group_index(l)?, pa, pb, pab)?);
        }
        PriorQuantity::Moment { nj, nl, p, process } => {
            out!("moment,{}", prior::mixed_moment(nj, nl, p, &process.params(2)?)?);
        }
        PriorQuantity::Coskew { p, process } => {
            out!("coskewness,{}", prior::coskewness(&process.params(2)?, p)?);
        }
    }
    Ok(())
}

fn run_fit(args: FitArgs) -> Result<()> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(a) = args.algo {
        cfg.algorithm = a;
    }
    cfg.iterations = args.iters.unwrap_or(cfg.iterations);
    cfg.burn_in = args.burnin.unwrap_or(cfg.burn_in);
    cfg.thin = args.thin.unwrap_or(cfg.thin);
    cfg.seed = args.seed.unwrap_or(cfg.seed);
    cfg.chains = args.chains.unwrap_or(cfg.chains);
    if let Some(out) = &args.out {
        cfg.out = out.to_string_lossy().into_owned();
    }
    cfg.prior_only |= args.prior_only;
    cfg.fix_lambda |= args.fix_lambda;
    cfg.fix_gamma |= args.fix_gamma;

    let data = harness::ingest_csv(&args.data)?;
    let fit = harness::fit(&data, &cfg)?;
    output::write_fit(&fit, std::path::Path::new(&cfg.out))?;
    out!("clusters,{}", fit.partition.k);
    for chain in &fit.chains {
        for (name, rate) in &chain.acceptance {
            out!("acceptance_{name},{rate:.3}");
        }
    }
    Ok(())
}

fn run_metrics(fit: PathBuf, truth: PathBuf) -> Result<()> {
    let est = output::read_partition(&fit.join("partition.csv"))?;
    let tru = output::read_partition(&truth.join("truth.csv"))?;
    let sizes: Vec<usize> = tru.iter().map(Vec::len).collect();
    if est.iter().map(Vec::len).collect::<Vec<_>>() != sizes {
        return Err(HmfmError::Dimension("fit and truth cover different observations".into()));
    }
    let flat = |p: &[Vec<usize>]| p.iter().flatten().copied().collect::<Vec<_>>();
    out!("metric,group,value");
    out!("ari,all,{}", ari(&flat(&tru), &flat(&est))?);
    for (j, (t, e)) in tru.iter().zip(&est).enumerate() {
        out!("ari,{},{}", j + 1, ari(t, e)?);
    }
    let sim = SimilarityMatrix::from_rows(output::read_similarity(&fit.join("similarity.csv"))?, &sizes)?;
    out!("cce,all,{}", cce(&SimilarityMatrix::from_labels(&tru), &sim)?);
    let mixtures = truth.join("mixture.csv");
    if mixtures.exists() {
        for (j, mix) in output::read_mixtures(&mixtures)?.iter().enumerate() {
            let path = fit.join(format!("density_{}.csv", j + 1));
            if path.exists() {
                let (grid, dens) = output::read_density(&path)?;
                out!("ps,{},{}", j + 1, predictive_score(|y| mix.pdf(y), &dens, &grid)?);
            }
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit(args) => run_fit(args),
        Command::Prior { quantity } => run_prior(quantity),
        Command::Elicit { lambda0, vlambda, gamma0, d, digits } => {
            let h = prior::elicit(&ElicitationSpec {
                lambda0,
                v_lambda: vlambda,
                gamma0,
                d,
            })?;
            out!("a_gamma={:.*}", digits, h.a_gamma);
            out!("b_gamma={:.*}", digits, h.b_gamma);
            out!("a_lambda={:.*}", digits, h.a_lambda);
            out!("b_lambda={:.*}", digits, h.b_lambda);
            Ok(())
        }
        Command::Simulate { experiment, n, seed, out } => {
            let exp = harness::generate_experiment(&ExperimentSpec { id: experiment, n, seed })?;
            output::write_experiment(&exp, &out)
        }
        Command::Metrics { fit, truth } => run_metrics(fit, truth),
        Command::Bench { sizes, iters, seed } => {
            let rows = harness::bench(&sizes, iters, seed)?;
            out!("algorithm,n,seconds_per_iter");
            for r in &rows {
                out!("{},{},{:e}", r.algorithm, r.n, r.seconds_per_iter);
            }
            for algo in [Algorithm::Conditional, Algorithm::Marginal] {
                let (x, y): (Vec<f64>, Vec<f64>) = rows
                    .iter()
                    .filter(|r| r.algorithm == algo)
                    .map(|r| (r.n as f64, r.seconds_per_iter))
                    .unzip();
                out!("slope_{algo},,{:.3}", harness::loglog_slope(&x, &y)?);
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hmfm: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
