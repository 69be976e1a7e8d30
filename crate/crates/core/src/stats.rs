//! Order-independent reductions and summary statistics.

use crate::scalar::Real;

/// Pairwise (cascade) summation; result depends only on the slice order.
pub fn pairwise_sum<T: Real>(xs: &[T]) -> T {
    const BLOCK: usize = 32;
    if xs.len() <= BLOCK {
        let mut s = T::zero();
        for &x in xs {
            s += x;
        }
        return s;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// `log Σ exp(x_i)`, or `-inf` for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let shifted: Vec<f64> = xs.iter().map(|&x| (x - m).exp()).collect();
    m + pairwise_sum(&shifted).ln()
}

/// Sample mean and standard error of the mean (two-pass).
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = pairwise_sum(xs) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let sq: Vec<f64> = xs.iter().map(|&x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Log-domain importance-weight summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogWeightSummary {
    /// `log( (1/N) Σ w_i )`.
    pub log_mean: f64,
    /// Delta-method standard error of `log_mean`.
    pub log_mean_stderr: f64,
    /// `(Σw)² / Σw²`.
    pub ess: f64,
}

/// Summarizes weights given by their logarithms.
pub fn summarize_log_weights(log_w: &[f64]) -> Option<LogWeightSummary> {
    let m = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return None;
    }
    let w: Vec<f64> = log_w.iter().map(|&l| (l - m).exp()).collect();
    let n = w.len() as f64;
    let s1 = pairwise_sum(&w);
    let sq: Vec<f64> = w.iter().map(|x| x * x).collect();
    let s2 = pairwise_sum(&sq);
    let (mean, se) = mean_stderr(&w);
    Some(LogWeightSummary {
        log_mean: m + (s1 / n).ln(),
        log_mean_stderr: se / mean,
        ess: s1 * s1 / s2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_exact_integers() {
        let xs: Vec<f64> = (1..=1000).map(f64::from).collect();
        assert_eq!(pairwise_sum(&xs), 500_500.0);
    }

    #[test]
    fn log_sum_exp_handles_large_arguments() {
        let v = log_sum_exp(&[1000.0, 1000.0]);
        assert!((v - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
    }

    #[test]
    fn ess_of_equal_weights_is_n() {
        let s = summarize_log_weights(&[3.0; 40]).unwrap();
        assert!((s.ess - 40.0).abs() < 1e-9);
        assert!((s.log_mean - 3.0).abs() < 1e-12);
        assert_eq!(s.log_mean_stderr, 0.0);
    }
}
