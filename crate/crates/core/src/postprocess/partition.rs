use std::collections::HashSet;

use crate::error::{HmfmError, Result};
use crate::sampler::IterationRecord;

/// Symmetric matrix of co-clustering frequencies over all observations,
/// indexed group by group.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    n: usize,
    values: Vec<f64>,
    index: Vec<(usize, usize)>,
}

impl SimilarityMatrix {
    /// The 0/1 co-clustering matrix of one partition given per group.
    pub fn from_labels(labels: &[Vec<usize>]) -> Self {
        let flat: Vec<usize> = labels.iter().flatten().copied().collect();
        let n = flat.len();
        let mut values = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                if flat[a] == flat[b] {
                    values[a * n + b] = 1.0;
                }
            }
        }
        SimilarityMatrix {
            n,
            values,
            index: index_of(labels),
        }
    }

    /// Rebuilds a matrix from its rows, e.g. after reading it from a file.
    pub fn from_rows(rows: Vec<Vec<f64>>, group_sizes: &[usize]) -> Result<Self> {
        let n = rows.len();
        if group_sizes.iter().sum::<usize>() != n || rows.iter().any(|r| r.len() != n) {
            return Err(HmfmError::dimension("similarity rows do not form an n×n matrix for these groups"));
        }
        let index = group_sizes
            .iter()
            .enumerate()
            .flat_map(|(j, &m)| (0..m).map(move |i| (j, i)))
            .collect();
        Ok(SimilarityMatrix {
            n,
            values: rows.into_iter().flatten().collect(),
            index,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.values[a * self.n + b]
    }

    pub fn row(&self, a: usize) -> &[f64] {
        &self.values[a * self.n..(a + 1) * self.n]
    }

    /// `(group, index within group)` of flat position `a`.
    pub fn position(&self, a: usize) -> (usize, usize) {
        self.index[a]
    }

    /// Largest entrywise absolute difference.
    pub fn max_abs_diff(&self, other: &SimilarityMatrix) -> Result<f64> {
        if self.n != other.n {
            return Err(HmfmError::dimension(format!("{} vs {} observations", self.n, other.n)));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

fn index_of(labels: &[Vec<usize>]) -> Vec<(usize, usize)> {
    labels
        .iter()
        .enumerate()
        .flat_map(|(j, g)| (0..g.len()).map(move |i| (j, i)))
        .collect()
}

fn flat_labels(r: &IterationRecord) -> Vec<usize> {
    r.allocations.iter().flatten().copied().collect()
}

/// Frequency with which each pair of observations shares a cluster.
pub fn similarity(records: &[IterationRecord]) -> Result<SimilarityMatrix> {
    let first = records.first().ok_or(HmfmError::EmptyChain)?;
    let index = index_of(&first.allocations);
    let n = index.len();
    let mut counts = vec![0u32; n * n];
    for r in records {
        let flat = flat_labels(r);
        if flat.len() != n {
            return Err(HmfmError::dimension("records disagree on the number of observations"));
        }
        // group members by label, then count pairs inside each block
        let k = flat.iter().max().map_or(0, |m| m + 1);
        let mut blocks = vec![Vec::new(); k];
        for (a, &l) in flat.iter().enumerate() {
            blocks[l].push(a);
        }
        for block in &blocks {
            for &a in block {
                let row = &mut counts[a * n..(a + 1) * n];
                for &b in block {
                    row[b] += 1;
                }
            }
        }
    }
    let t = records.len() as f64;
    Ok(SimilarityMatrix {
        n,
        values: counts.into_iter().map(|c| c as f64 / t).collect(),
        index,
    })
}

/// A partition of all observations with contiguous labels `0..k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionEstimate {
    pub labels: Vec<usize>,
    pub k: usize,
    pub group_sizes: Vec<usize>,
}

impl PartitionEstimate {
    pub fn from_groups(labels: &[Vec<usize>]) -> Self {
        let group_sizes = labels.iter().map(Vec::len).collect();
        let (labels, k) = relabel(&labels.iter().flatten().copied().collect::<Vec<_>>());
        PartitionEstimate { labels, k, group_sizes }
    }

    /// Labels of group `j`.
    pub fn group(&self, j: usize) -> &[usize] {
        let start: usize = self.group_sizes[..j].iter().sum();
        &self.labels[start..start + self.group_sizes[j]]
    }

    pub fn groups(&self) -> Vec<Vec<usize>> {
        (0..self.group_sizes.len()).map(|j| self.group(j).to_vec()).collect()
    }
}

fn relabel(flat: &[usize]) -> (Vec<usize>, usize) {
    let mut map = std::collections::HashMap::new();
    let labels = flat
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect();
    (labels, map.len())
}

/// Lower bound of the posterior expected variation of information of the
/// flat partition `labels` given the similarity matrix (base-2 logarithms).
pub fn vi_score(labels: &[usize], sim: &SimilarityMatrix) -> f64 {
    let n = sim.n();
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut blocks = vec![Vec::new(); k];
    for (a, &l) in labels.iter().enumerate() {
        blocks[l].push(a);
    }
    let mut score = 0.0;
    for block in &blocks {
        let size = (block.len() as f64).log2();
        for &a in block {
            let row = sim.row(a);
            let inside: f64 = block.iter().map(|&b| row[b]).sum();
            score += size - 2.0 * inside.log2();
        }
    }
    for a in 0..n {
        score += sim.row(a).iter().sum::<f64>().log2();
    }
    score
}

/// Visited partition minimizing [`vi_score`]; ties go to the lexicographically
/// smallest labelling, so the result does not depend on the visiting order.
pub fn min_vi(records: &[IterationRecord], sim: &SimilarityMatrix) -> Result<PartitionEstimate> {
    let first = records.first().ok_or(HmfmError::EmptyChain)?;
    let mut seen = HashSet::new();
    let mut candidates = Vec::new();
    for r in records {
        let (labels, _) = relabel(&flat_labels(r));
        if labels.len() != sim.n() {
            return Err(HmfmError::dimension("partition and similarity sizes differ"));
        }
        if seen.insert(labels.clone()) {
            candidates.push(labels);
        }
    }
    let threads = std::thread::available_parallelism().map_or(1, |t| t.get()).min(candidates.len());
    let chunk = candidates.len().div_ceil(threads.max(1));
    let scores: Vec<f64> = std::thread::scope(|s| {
        let handles: Vec<_> = candidates
            .chunks(chunk)
            .map(|c| s.spawn(move || c.iter().map(|l| vi_score(l, sim)).collect::<Vec<_>>()))
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("scoring thread panicked")).collect()
    });
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s < scores[best] || s == scores[best] && candidates[i] < candidates[best] {
            best = i;
        }
    }
    let labels = candidates.swap_remove(best);
    let k = labels.iter().max().map_or(0, |m| m + 1);
    Ok(PartitionEstimate {
        labels,
        k,
        group_sizes: first.allocations.iter().map(Vec::len).collect(),
    })
}

fn choose2(x: usize) -> f64 {
    let x = x as f64;
    x * (x - 1.0) / 2.0
}

/// Adjusted Rand index. Two trivial partitions that coincide score 1.
pub fn ari(truth: &[usize], est: &[usize]) -> Result<f64> {
    if truth.len() != est.len() {
        return Err(HmfmError::dimension(format!(
            "label vectors of length {} and {}",
            truth.len(),
            est.len()
        )));
    }
    let (t, kt) = relabel(truth);
    let (e, ke) = relabel(est);
    let mut table = vec![0usize; kt * ke];
    for (&a, &b) in t.iter().zip(&e) {
        table[a * ke + b] += 1;
    }
    let index: f64 = table.iter().map(|&c| choose2(c)).sum();
    let rows: f64 = (0..kt).map(|a| choose2(table[a * ke..(a + 1) * ke].iter().sum())).sum();
    let cols: f64 = (0..ke).map(|b| choose2((0..kt).map(|a| table[a * ke + b]).sum())).sum();
    let pairs = choose2(t.len());
    if pairs == 0.0 {
        return Ok(1.0);
    }
    let expected = rows * cols / pairs;
    let max = 0.5 * (rows + cols);
    if max == expected {
        return Ok(if t == e { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / (max - expected))
}

/// Co-clustering error `(1/n) Σ_{a,b} |π_ab - π̂_ab|`.
pub fn cce(truth: &SimilarityMatrix, est: &SimilarityMatrix) -> Result<f64> {
    if truth.n != est.n {
        return Err(HmfmError::dimension(format!("{} vs {} observations", truth.n, est.n)));
    }
    let total: f64 = truth.values.iter().zip(&est.values).map(|(a, b)| (a - b).abs()).sum();
    Ok(total / truth.n as f64)
}
