//! CSV files written by `hmfm fit` and `hmfm simulate`, and their readers.
//!
//! Reals are written in shortest round-trip form; groups, observations and
//! clusters are 1-based.

use std::fs::File;
use std::path::Path;

use super::config::FitResult;
use super::experiments::{Experiment, GaussianMixture};
use super::ingest::write_csv;
use crate::error::{HmfmError, Result};
use crate::sampler::{Algorithm, ChainOutput};

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    Ok(csv::Writer::from_writer(File::create(path)?))
}

/// `iter,K,M,lambda,gamma_1..d,u_1..d`; `M` is empty for the marginal sampler.
pub fn write_scalars(out: &ChainOutput, path: &Path) -> Result<()> {
    let d = out.group_sizes.len();
    let mut w = writer(path)?;
    let mut header: Vec<String> = ["iter", "K", "M", "lambda"].iter().map(|s| s.to_string()).collect();
    header.extend((1..=d).map(|j| format!("gamma_{j}")));
    header.extend((1..=d).map(|j| format!("u_{j}")));
    w.write_record(&header)?;
    for r in &out.records {
        let mut row = vec![r.iter.to_string(), r.k.to_string(), r.m.map(|m| m.to_string()).unwrap_or_default(), r.lambda.to_string()];
        row.extend(r.gamma.iter().map(f64::to_string));
        row.extend(r.u.iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `iter,group,obs,cluster`.
pub fn write_allocations(out: &ChainOutput, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["iter", "group", "obs", "cluster"])?;
    for r in &out.records {
        for (j, g) in r.allocations.iter().enumerate() {
            for (i, l) in g.iter().enumerate() {
                w.write_record([r.iter.to_string(), (j + 1).to_string(), (i + 1).to_string(), (l + 1).to_string()])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// `iter,component,mu,sigma2,S_1..d` (conditional chains only).
pub fn write_components(out: &ChainOutput, path: &Path) -> Result<()> {
    let d = out.group_sizes.len();
    let mut w = writer(path)?;
    let mut header: Vec<String> = ["iter", "component", "mu", "sigma2"].iter().map(|s| s.to_string()).collect();
    header.extend((1..=d).map(|j| format!("S_{j}")));
    w.write_record(&header)?;
    for r in &out.records {
        for (m, c) in r.components.iter().enumerate() {
            let mut row = vec![r.iter.to_string(), (m + 1).to_string(), c.mu.to_string(), c.sigma2.to_string()];
            row.extend(c.s.iter().map(f64::to_string));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `group,obs,cluster` for one partition given per group.
pub fn write_partition(labels: &[Vec<usize>], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["group", "obs", "cluster"])?;
    for (j, g) in labels.iter().enumerate() {
        for (i, l) in g.iter().enumerate() {
            w.write_record([(j + 1).to_string(), (i + 1).to_string(), (l + 1).to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a `group,obs,cluster` file back into 0-based labels per group.
pub fn read_partition(path: &Path) -> Result<Vec<Vec<usize>>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out: Vec<Vec<usize>> = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let line = row + 2;
        let rec = rec?;
        let parse = |k: usize| -> Result<usize> {
            rec.get(k)
                .and_then(|s| s.trim().parse::<usize>().ok())
                .filter(|v| *v >= 1)
                .ok_or_else(|| HmfmError::Data {
                    line: Some(line),
                    msg: format!("expected a positive integer in column {}", k + 1),
                })
        };
        let (g, i, c) = (parse(0)?, parse(1)?, parse(2)?);
        if out.len() < g {
            out.resize_with(g, Vec::new);
        }
        if i != out[g - 1].len() + 1 {
            return Err(HmfmError::Data {
                line: Some(line),
                msg: "observations must be listed in order".into(),
            });
        }
        out[g - 1].push(c - 1);
    }
    Ok(out)
}

/// Dense matrix with leading `group,obs` columns.
pub fn write_similarity(sim: &crate::postprocess::SimilarityMatrix, path: &Path) -> Result<()> {
    let n = sim.n();
    let mut w = writer(path)?;
    let mut header = vec!["group".to_string(), "obs".to_string()];
    header.extend((1..=n).map(|b| format!("s_{b}")));
    w.write_record(&header)?;
    for a in 0..n {
        let (j, i) = sim.position(a);
        let mut row = vec![(j + 1).to_string(), (i + 1).to_string()];
        row.extend(sim.row(a).iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the values of a similarity file as rows.
pub fn read_similarity(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let vals = rec
            .iter()
            .skip(2)
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| HmfmError::Data {
                line: Some(row + 2),
                msg: e.to_string(),
            })?;
        rows.push(vals);
    }
    Ok(rows)
}

/// `y,density`.
pub fn write_density(grid: &[f64], density: &[f64], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["y", "density"])?;
    for (y, f) in grid.iter().zip(density) {
        w.write_record([y.to_string(), f.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_density(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut r = csv::Reader::from_path(path)?;
    let (mut ys, mut fs) = (Vec::new(), Vec::new());
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let get = |k: usize| {
            rec.get(k).and_then(|s| s.parse::<f64>().ok()).ok_or_else(|| HmfmError::Data {
                line: Some(row + 2),
                msg: "expected two reals".into(),
            })
        };
        ys.push(get(0)?);
        fs.push(get(1)?);
    }
    Ok((ys, fs))
}

/// `group,component,weight,mean,variance` describing the true densities.
pub fn write_mixtures(mixtures: &[GaussianMixture], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["group", "component", "weight", "mean", "variance"])?;
    for (j, m) in mixtures.iter().enumerate() {
        for k in 0..m.weights.len() {
            w.write_record([
                (j + 1).to_string(),
                (m.components[k] + 1).to_string(),
                m.weights[k].to_string(),
                m.means[k].to_string(),
                m.variances[k].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_mixtures(path: &Path) -> Result<Vec<GaussianMixture>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out: Vec<GaussianMixture> = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = || HmfmError::Data {
            line: Some(row + 2),
            msg: "malformed mixture row".into(),
        };
        let g: usize = rec.get(0).and_then(|s| s.parse().ok()).filter(|g| *g >= 1).ok_or_else(bad)?;
        let c: usize = rec.get(1).and_then(|s| s.parse().ok()).filter(|c| *c >= 1).ok_or_else(bad)?;
        let v: Vec<f64> = (2..5).map(|k| rec.get(k).and_then(|s| s.parse().ok())).collect::<Option<_>>().ok_or_else(bad)?;
        if out.len() < g {
            out.resize_with(g, || GaussianMixture {
                weights: vec![],
                means: vec![],
                variances: vec![],
                components: vec![],
            });
        }
        let m = &mut out[g - 1];
        m.components.push(c - 1);
        m.weights.push(v[0]);
        m.means.push(v[1]);
        m.variances.push(v[2]);
    }
    Ok(out)
}

/// `data.csv`, `truth.csv` and `mixture.csv` for a simulated experiment.
pub fn write_experiment(exp: &Experiment, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_csv(&exp.data, File::create(dir.join("data.csv"))?)?;
    write_partition(&exp.truth, &dir.join("truth.csv"))?;
    write_mixtures(&exp.densities, &dir.join("mixture.csv"))
}

fn write_chain(out: &ChainOutput, dir: &Path) -> Result<()> {
    write_scalars(out, &dir.join("scalars.csv"))?;
    write_allocations(out, &dir.join("allocations.csv"))?;
    if out.algorithm == Algorithm::Conditional {
        write_components(out, &dir.join("components.csv"))?;
    }
    Ok(())
}

/// Writes every output of `hmfm fit` under `dir`. With several chains the
/// per-chain files go to `chain_<c>/` and the pooled summaries stay on top.
pub fn write_fit(fit: &FitResult, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    if fit.chains.len() == 1 {
        write_chain(&fit.chains[0], dir)?;
    } else {
        for (c, chain) in fit.chains.iter().enumerate() {
            let sub = dir.join(format!("chain_{}", c + 1));
            std::fs::create_dir_all(&sub)?;
            write_chain(chain, &sub)?;
        }
    }
    write_similarity(&fit.similarity, &dir.join("similarity.csv"))?;
    write_partition(&fit.partition.groups(), &dir.join("partition.csv"))?;
    for (j, dens) in fit.densities.iter().enumerate() {
        write_density(&fit.grid, dens, &dir.join(format!("density_{}.csv", j + 1)))?;
    }
    Ok(())
}
