use rand::Rng;

/// Lloyd's algorithm on the real line with k-means++ seeding.
///
/// Returns one label per value, contiguous from 0; centres that end up empty
/// are dropped, so fewer than `k` labels may be used.
pub fn kmeans_1d<R: Rng + ?Sized>(values: &[f64], k: usize, rng: &mut R) -> Vec<usize> {
    let n = values.len();
    if n == 0 {
        return Vec::new();
    }
    let k = k.clamp(1, n);
    let mut centres = vec![values[rng.random_range(0..n)]];
    let mut d2 = vec![0.0; n];
    while centres.len() < k {
        let mut total = 0.0;
        for (i, &y) in values.iter().enumerate() {
            d2[i] = centres.iter().map(|c| (y - c) * (y - c)).fold(f64::INFINITY, f64::min);
            total += d2[i];
        }
        if total == 0.0 {
            break;
        }
        let mut target = rng.random::<f64>() * total;
        let mut pick = n - 1;
        for (i, &w) in d2.iter().enumerate() {
            if target < w {
                pick = i;
                break;
            }
            target -= w;
        }
        centres.push(values[pick]);
    }
    let mut labels = vec![0usize; n];
    for _ in 0..100 {
        let mut changed = false;
        for (i, &y) in values.iter().enumerate() {
            let best = centres
                .iter()
                .enumerate()
                .min_by(|a, b| (y - a.1).abs().total_cmp(&(y - b.1).abs()))
                .map(|(c, _)| c)
                .unwrap_or(0);
            if best != labels[i] {
                labels[i] = best;
                changed = true;
            }
        }
        let mut sums = vec![(0.0, 0usize); centres.len()];
        for (&l, &y) in labels.iter().zip(values) {
            sums[l].0 += y;
            sums[l].1 += 1;
        }
        for (c, (s, m)) in centres.iter_mut().zip(&sums) {
            if *m > 0 {
                *c = s / *m as f64;
            }
        }
        if !changed {
            break;
        }
    }
    // relabel contiguously in order of first appearance
    let mut map = vec![usize::MAX; centres.len()];
    let mut next = 0;
    for l in labels.iter_mut() {
        if map[*l] == usize::MAX {
            map[*l] = next;
            next += 1;
        }
        *l = map[*l];
    }
    labels
}
