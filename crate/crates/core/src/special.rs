//! Log-domain helpers shared by the prior calculus and the samplers.

pub use statrs::function::gamma::{digamma, ln_gamma};

/// `log(exp(a) + exp(b))` without overflow. Handles `-inf` operands.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `log(sum(exp(xs)))`. Returns `-inf` for an empty slice or all `-inf` input.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Log of the rising factorial `(x)_n = Γ(x+n)/Γ(x)` for `x > 0`.
#[inline]
pub fn ln_pochhammer(x: f64, n: f64) -> f64 {
    if n == 0.0 {
        0.0
    } else {
        ln_gamma(x + n) - ln_gamma(x)
    }
}

/// `log(n!)`.
#[inline]
pub fn ln_factorial(n: usize) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

/// Normalizes log-weights in place into probabilities; returns the log normalizer.
pub fn normalize_log_weights(log_w: &mut [f64]) -> f64 {
    let z = log_sum_exp(log_w);
    for w in log_w.iter_mut() {
        *w = (*w - z).exp();
    }
    z
}

/// Draws an index from unnormalized log-weights using a single uniform variate.
pub fn sample_log_categorical<R: rand::Rng + ?Sized>(log_w: &[f64], rng: &mut R) -> usize {
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    debug_assert!(max.is_finite(), "all categorical weights vanish");
    let total: f64 = log_w.iter().map(|w| (w - max).exp()).sum();
    let mut target = rng.random::<f64>() * total;
    let mut last = 0;
    for (i, w) in log_w.iter().enumerate() {
        let p = (w - max).exp();
        if p > 0.0 {
            last = i;
        }
        if target < p {
            return i;
        }
        target -= p;
    }
    last
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn log_add_exp_matches_direct() {
        let v = log_add_exp(1.0f64.ln(), 3.0f64.ln());
        assert!((v - 4.0f64.ln()).abs() < 1e-15);
        assert_eq!(log_add_exp(f64::NEG_INFINITY, 2.0), 2.0);
        assert!((log_add_exp(1000.0, 1000.0) - (1000.0 + 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn log_sum_exp_empty_is_neg_inf() {
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY; 3]), f64::NEG_INFINITY);
    }

    #[test]
    fn pochhammer_is_rising_factorial() {
        // (1.5)_3 = 1.5 * 2.5 * 3.5
        let v = ln_pochhammer(1.5, 3.0).exp();
        assert!((v - 1.5 * 2.5 * 3.5).abs() < 1e-12);
        assert_eq!(ln_pochhammer(0.3, 0.0), 0.0);
    }

    #[test]
    fn categorical_skips_zero_weights() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let w = [f64::NEG_INFINITY, 0.0, f64::NEG_INFINITY];
        for _ in 0..100 {
            assert_eq!(sample_log_categorical(&w, &mut rng), 1);
        }
    }
}
