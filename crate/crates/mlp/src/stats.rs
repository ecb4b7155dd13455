//! Small aggregation helpers shared by the estimator and the checks.
//!
//! Sums run sequentially over slices in index order, so results do not
//! depend on which thread produced which element.

/// Two-pass sample mean and unbiased sample variance.
pub fn mean_and_sample_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    assert!(n >= 1, "need at least one sample");
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>();
    (mean, ss / (n - 1) as f64)
}

/// Standard error of the sample mean.
pub fn standard_error(xs: &[f64]) -> f64 {
    let (_, var) = mean_and_sample_variance(xs);
    (var / xs.len() as f64).sqrt()
}

/// Mean of `xs`, its square root, and the delta-method standard error of the
/// square root: `se(√m) ≈ se(m) / (2√m)`. Returns zero error for a zero mean.
pub fn sqrt_mean_with_se(xs: &[f64]) -> (f64, f64) {
    let (mean, var) = mean_and_sample_variance(xs);
    let se_mean = (var / xs.len() as f64).sqrt();
    let root = mean.max(0.0).sqrt();
    let se = if root > 0.0 { se_mean / (2.0 * root) } else { 0.0 };
    (root, se)
}

/// Two-sided Kolmogorov-Smirnov statistic of a sorted sample against `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> f64 {
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        let hi = (i as f64 + 1.0) / n - f;
        let lo = f - i as f64 / n;
        d = d.max(hi).max(lo);
    }
    d
}
