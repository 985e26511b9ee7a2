#![allow(dead_code)]

use hmfm::likelihood::{log_marginal, ClusterSuffStats, GroupedDataset, NigParams};
use hmfm::prior::{log_peppf, GroupCounts, VecFdpParams};

/// All set partitions of `0..n` as restricted growth strings.
pub fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, cur: &mut Vec<usize>, max: usize, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for b in 0..=max + 1 {
            cur.push(b);
            rec(n, cur, max.max(b), out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if n > 0 {
        rec(n, &mut vec![0], 0, &mut out);
    }
    out
}

pub fn counts_of(partition: &[usize], group_of: &[usize], d: usize) -> GroupCounts {
    let k = partition.iter().max().unwrap() + 1;
    let mut counts = vec![vec![0usize; k]; d];
    for (i, &b) in partition.iter().enumerate() {
        counts[group_of[i]][b] += 1;
    }
    GroupCounts::new(counts).unwrap()
}

/// Restricted growth string of a chain's labels, flattened group by group.
pub fn canonical(labels: &[Vec<usize>]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    labels
        .iter()
        .flatten()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect()
}

/// Exact posterior over global partitions (flattened order) by enumeration.
/// With `data = None` this is the prior.
pub fn exact_partition_law(
    sizes: &[usize],
    params: &VecFdpParams,
    data: Option<(&GroupedDataset, &NigParams)>,
) -> Vec<(Vec<usize>, f64)> {
    let group_of: Vec<usize> = sizes
        .iter()
        .enumerate()
        .flat_map(|(j, &n)| std::iter::repeat(j).take(n))
        .collect();
    let flat: Vec<f64> = match data {
        Some((d, _)) => d.groups().iter().flatten().map(|o| o.marks[0]).collect(),
        None => Vec::new(),
    };
    let parts = set_partitions(group_of.len());
    let mut logs: Vec<f64> = parts
        .iter()
        .map(|p| {
            let mut lp = log_peppf(&counts_of(p, &group_of, sizes.len()), params).unwrap();
            if let Some((_, base)) = data {
                let k = p.iter().max().unwrap() + 1;
                for b in 0..k {
                    let ys: Vec<f64> = p.iter().zip(&flat).filter(|(l, _)| **l == b).map(|(_, y)| *y).collect();
                    lp += log_marginal(&ClusterSuffStats::from_values(&ys), base);
                }
            }
            lp
        })
        .collect();
    let mx = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = logs.iter().map(|l| (l - mx).exp()).sum();
    for l in &mut logs {
        *l = (*l - mx).exp() / z;
    }
    parts.into_iter().zip(logs).collect()
}

pub fn k_law(law: &[(Vec<usize>, f64)], k_max: usize) -> Vec<f64> {
    let mut out = vec![0.0; k_max + 1];
    for (p, w) in law {
        out[p.iter().max().unwrap() + 1] += w;
    }
    out
}

pub fn tv(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().max(b.len());
    0.5 * (0..n)
        .map(|i| (a.get(i).copied().unwrap_or(0.0) - b.get(i).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
}
