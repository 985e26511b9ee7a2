use crate::error::{HmfmError, Result};
use crate::special::log_add_exp;

/// Table of `log |C(n, k; -γ)|`, the central generalized factorial
/// coefficients, for `0 <= k <= n <= n_max`.
///
/// Built with the triangular recurrence
/// `|C(n+1,k)| = γ |C(n,k-1)| + (kγ + n) |C(n,k)|`, `|C(0,0)| = 1`.
/// The structural zeros `|C(n,0)|`, `n >= 1`, are stored as `-inf`.
#[derive(Debug, Clone)]
pub struct GfcTable {
    n_max: usize,
    gamma: f64,
    values: Vec<Vec<f64>>,
}

impl GfcTable {
    pub fn new(n_max: usize, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(HmfmError::domain(format!("gamma must be positive, got {gamma}")));
        }
        let ln_g = gamma.ln();
        let mut values: Vec<Vec<f64>> = Vec::with_capacity(n_max + 1);
        values.push(vec![0.0]);
        for n in 0..n_max {
            let prev = &values[n];
            let mut row = vec![f64::NEG_INFINITY; n + 2];
            for (k, slot) in row.iter_mut().enumerate().skip(1) {
                let from_left = ln_g + prev[k - 1];
                let stay = if k <= n {
                    (k as f64 * gamma + n as f64).ln() + prev[k]
                } else {
                    f64::NEG_INFINITY
                };
                *slot = log_add_exp(from_left, stay);
            }
            values.push(row);
        }
        Ok(GfcTable {
            n_max,
            gamma,
            values,
        })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `log |C(n, k; -γ)|`; `-inf` when the coefficient vanishes (`k > n` or `k = 0 < n`).
    pub fn ln_abs(&self, n: usize, k: usize) -> f64 {
        assert!(n <= self.n_max, "n = {n} exceeds table size {}", self.n_max);
        if k > n {
            f64::NEG_INFINITY
        } else {
            self.values[n][k]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::{ln_factorial, ln_pochhammer, log_sum_exp};

    // (1/k!) Σ over compositions (r_1..r_k) of n into positive parts of
    // multinomial(n; r) ∏ (γ)_{r_i}
    fn brute_force(n: usize, k: usize, gamma: f64) -> f64 {
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
        if n == 0 && k == 0 {
            return 0.0;
        }
        let mut terms = Vec::new();
        rec(n, k, 0.0, gamma, &mut terms);
        log_sum_exp(&terms) + ln_factorial(n) - ln_factorial(k)
    }

    #[test]
    fn small_values() {
        let t = GfcTable::new(3, 1.0).unwrap();
        assert!((t.ln_abs(1, 1).exp() - 1.0).abs() < 1e-15);
        assert!((t.ln_abs(2, 1).exp() - 2.0).abs() < 1e-14);
        assert!((t.ln_abs(2, 2).exp() - 1.0).abs() < 1e-14);
        let g = GfcTable::new(4, 0.3).unwrap();
        assert!((g.ln_abs(1, 1).exp() - 0.3).abs() < 1e-15);
        assert!((g.ln_abs(4, 4) - 4.0 * 0.3f64.ln()).abs() < 1e-12);
        assert_eq!(g.ln_abs(3, 0), f64::NEG_INFINITY);
        assert_eq!(g.ln_abs(0, 0), 0.0);
        assert_eq!(g.ln_abs(2, 3), f64::NEG_INFINITY);
    }

    #[test]
    fn recurrence_matches_composition_enumeration() {
        for &gamma in &[0.05, 0.5, 1.0, 2.7] {
            let table = GfcTable::new(10, gamma).unwrap();
            for n in 1..=10 {
                for k in 1..=n {
                    let bf = brute_force(n, k, gamma);
                    let diff = (table.ln_abs(n, k) - bf).abs();
                    assert!(diff < 1e-10, "γ={gamma} n={n} k={k}: diff {diff}");
                }
            }
        }
    }

    #[test]
    fn large_tables_stay_finite() {
        let t = GfcTable::new(2000, 0.01).unwrap();
        for k in 1..=2000 {
            assert!(t.ln_abs(2000, k).is_finite());
        }
    }

    #[test]
    fn rejects_non_positive_gamma() {
        assert!(GfcTable::new(3, 0.0).is_err());
        assert!(GfcTable::new(3, -1.0).is_err());
    }
}
