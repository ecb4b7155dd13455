//! Closed-form moment and error bounds for the counterexample, so measured
//! estimates can be checked against theory.
//!
//! The upper bounds are driven by the fourth-moment constants
//! `c1 = (E|f(W_1)|⁴)^{1/4}` and `c2 = (E|γ(W_1)|⁴)^{1/4}`; for the
//! counterexample `|f(W_1)|²` is chi-square with `d-1` degrees of freedom,
//! giving `c1 = ((d-1)(d+1))^{1/4}`, and `γ(v) = |v_1|` gives `c2 = 3^{1/4}`.
//! The lower bounds hold in the feasible regime `d >= (1224 m)^n n!`.
//!
//! `upper_error` is the simplified form `d^{(n+1)/2} 6^{n+1}`; the sharper
//! variant `|g(0)| + c2 max(c1^n, 1) 6^n sqrt(d)` (which it dominates for the
//! counterexample, where `g(0) = 0`) is available as `upper_error_moment_form`.

use std::fmt;

/// All bound values for a parameter triple `(d, n, m)`.
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub d: usize,
    pub n: i32,
    pub m: u32,
    pub c1: f64,
    pub c2: f64,
    pub upper_moment_fv: f64,
    pub upper_error: f64,
    pub lower_moment_fv: Option<f64>,
    pub lower_error: Option<f64>,
    pub feasible: bool,
    /// Dimension floor `(1224 m)^n n!`; `f64::INFINITY` on overflow.
    pub threshold_d: f64,
}

impl fmt::Display for BoundReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "d={} n={} m={}", self.d, self.n, self.m)?;
        writeln!(f, "  c1={:.6} c2={:.6}", self.c1, self.c2)?;
        writeln!(f, "  upper_moment_fV={:.6}", self.upper_moment_fv)?;
        writeln!(f, "  upper_error={:.6}", self.upper_error)?;
        writeln!(f, "  threshold_d={}", self.threshold_d)?;
        writeln!(f, "  feasible={}", self.feasible)?;
        match (self.lower_moment_fv, self.lower_error) {
            (Some(lm), Some(le)) => {
                writeln!(f, "  lower_moment_fV={lm:.6}")?;
                write!(f, "  lower_error={le:.6}")
            }
            _ => write!(f, "  lower bounds: infeasible"),
        }
    }
}

/// Fourth-moment constants `(c1, c2)` of the counterexample in dimension `d`.
pub fn constants_counterexample(d: usize) -> (f64, f64) {
    let d = d as f64;
    let c1 = ((d - 1.0) * (d + 1.0)).powf(0.25);
    let c2 = 3.0f64.powf(0.25);
    (c1, c2)
}

/// `(c1, c2)` for an arbitrary problem, from the user-supplied fourth moments
/// `E|f(W_1)|⁴` and `E|γ(W_1)|⁴`.
pub fn constants_from_fourth_moments(f_fourth_moment: f64, gamma_fourth_moment: f64) -> (f64, f64) {
    (f_fourth_moment.powf(0.25), gamma_fourth_moment.powf(0.25))
}

/// Moment upper bound `c2 max(c1^n, 1) 6^(n-1)` for explicit constants.
pub fn upper_moment_fv_with(c1: f64, c2: f64, n: i32) -> f64 {
    c2 * c1.powi(n).max(1.0) * 6.0f64.powi(n - 1)
}

/// Upper bound on `(E[f(V_{n,m})²])^{1/2}`: `c2 max(c1^n, 1) 6^(n-1)`.
pub fn upper_moment_fv(d: usize, n: i32) -> f64 {
    let (c1, c2) = constants_counterexample(d);
    c2 * c1.powi(n).max(1.0) * 6.0f64.powi(n - 1)
}

/// Upper bound on the joint L² error at the origin: `d^((n+1)/2) 6^(n+1)`.
pub fn upper_error(d: usize, n: i32) -> f64 {
    (d as f64).powf((n as f64 + 1.0) / 2.0) * 6.0f64.powi(n + 1)
}

/// The sharper moment-form upper bound `|g(0)| + c2 max(c1^n, 1) 6^n sqrt(d)`
/// with `g(0) = 0` for the counterexample.
pub fn upper_error_moment_form(d: usize, n: i32) -> f64 {
    let (c1, c2) = constants_counterexample(d);
    c2 * c1.powi(n).max(1.0) * 6.0f64.powi(n) * (d as f64).sqrt()
}

/// Dimension floor `(1224 m)^n n!` of the lower-bound regime, computed in
/// 64-bit floating point with overflow reported as `f64::INFINITY`.
pub fn feasible_dimension(n: i32, m: u32) -> f64 {
    let base = 1224.0 * m as f64;
    let mut acc = 1.0f64;
    for k in 1..=n {
        acc *= base * k as f64; // (1224 m)^n n! built one factor pair at a time
        if !acc.is_finite() {
            return f64::INFINITY;
        }
    }
    acc
}

fn is_feasible(d: usize, n: i32, m: u32) -> bool {
    (d as f64) >= feasible_dimension(n, m)
}

/// Lower bound `d^(n/2) / ((34 m)^(n/2) sqrt(n!))` on `(E[f(V_{n,m})²])^{1/2}`,
/// present only in the feasible regime.
pub fn lower_moment_fv(d: usize, n: i32, m: u32) -> Option<f64> {
    if !is_feasible(d, n, m) {
        return None;
    }
    let mut acc = 1.0f64;
    for k in 1..=n {
        acc *= d as f64 / (34.0 * m as f64 * k as f64); // d^n / ((34 m)^n n!)
    }
    Some(acc.sqrt())
}

/// Lower bound on the joint L² error at the origin: the moment lower bound
/// minus 1, under the same feasibility test. May be negative.
pub fn lower_error(d: usize, n: i32, m: u32) -> Option<f64> {
    lower_moment_fv(d, n, m).map(|b| b - 1.0)
}

/// Assemble the full report for `(d, n, m)`.
pub fn report(d: usize, n: i32, m: u32) -> BoundReport {
    let (c1, c2) = constants_counterexample(d);
    BoundReport {
        d,
        n,
        m,
        c1,
        c2,
        upper_moment_fv: upper_moment_fv(d, n),
        upper_error: upper_error(d, n),
        lower_moment_fv: lower_moment_fv(d, n, m),
        lower_error: lower_error(d, n, m),
        feasible: is_feasible(d, n, m),
        threshold_d: feasible_dimension(n, m),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index_rng::{derive_stream, MultiIndex};
    use crate::stats::mean_and_sample_variance;

    #[test]
    fn constants_examples() {
        let (c1, c2) = constants_counterexample(1);
        assert_eq!(c1, 0.0);
        assert!((c2 - 3.0f64.powf(0.25)).abs() < 1e-15);
        let (c1, _) = constants_counterexample(2);
        assert!((c1 - 3.0f64.powf(0.25)).abs() < 1e-15);
        let (c1, _) = constants_counterexample(101);
        assert!((c1 - (100.0f64 * 102.0).powf(0.25)).abs() < 1e-12);
        assert!((c1 - 10.0497).abs() < 1e-3);
    }

    // E|Z|^4 = 3 via quadrature, and E[(chi2_k)^2] = k (k + 2) via Monte
    // Carlo: together they pin E[f(W_1)^4] = (d-1)(d+1).
    #[test]
    fn fourth_moment_oracles() {
        // Simpson for E Z^4 over [-16, 16].
        let integrand =
            |z: f64| z.powi(4) * (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let n = 20_000usize;
        let (lo, hi) = (-16.0, 16.0);
        let h = (hi - lo) / n as f64;
        let mut acc = integrand(lo) + integrand(hi);
        for k in 1..n {
            acc += if k % 2 == 1 { 4.0 } else { 2.0 } * integrand(lo + k as f64 * h);
        }
        let ez4 = acc * h / 3.0;
        assert!((ez4 - 3.0).abs() < 1e-10, "E Z^4 = {ez4}");

        // chi-square(3) second moment: matches (d-1)(d+1) at d = 4.
        let mut stream = derive_stream(404, 0, &MultiIndex::root(0));
        let sim: Vec<f64> = (0..1_000_000)
            .map(|_| {
                let w = stream.sample_brownian_increment(3, 1.0).unwrap();
                let chi2: f64 = w.iter().map(|z| z * z).sum();
                chi2 * chi2
            })
            .collect();
        let (mean, _) = mean_and_sample_variance(&sim);
        assert!((mean - 15.0).abs() < 0.15, "E[(chi2_3)^2] = {mean}");
    }

    #[test]
    fn explicit_constants_match_counterexample_wiring() {
        let d = 17;
        let (c1, c2) = constants_counterexample(d);
        let (e1, e2) = constants_from_fourth_moments((d as f64 - 1.0) * (d as f64 + 1.0), 3.0);
        assert_eq!(c1, e1);
        assert_eq!(c2, e2);
        assert_eq!(upper_moment_fv_with(c1, c2, 3), upper_moment_fv(d, 3));
    }

    #[test]
    fn upper_moment_examples() {
        assert!((upper_moment_fv(1, 1) - 3.0f64.powf(0.25)).abs() < 1e-12);
        let v = upper_moment_fv(2048, 1);
        assert!((v - 3.0f64.powf(0.25) * (2047.0f64 * 2049.0).powf(0.25)).abs() < 1e-9);
        assert!((v - 59.57).abs() < 0.02);
        let v2 = upper_moment_fv(2048, 2);
        assert!((v2 - 3.0f64.powf(0.25) * (2047.0f64 * 2049.0).sqrt() * 6.0).abs() < 1e-7);
        assert!((v2 - 16170.0).abs() < 10.0);
    }

    #[test]
    fn upper_error_examples() {
        assert_eq!(upper_error(1, 1), 36.0);
        assert_eq!(upper_error(2048, 1), 2048.0 * 36.0);
        assert_eq!(upper_error(100, 3), 12_960_000.0);
    }

    #[test]
    fn feasibility_threshold_examples() {
        assert_eq!(feasible_dimension(1, 1), 1224.0);
        assert_eq!(feasible_dimension(2, 1), 1224.0 * 1224.0 * 2.0);
        assert_eq!(feasible_dimension(3, 2), 2448.0f64.powi(3) * 6.0);
        assert!(feasible_dimension(200, 1000).is_infinite());
    }

    #[test]
    fn lower_bound_examples() {
        let v = lower_moment_fv(2048, 1, 1).unwrap();
        assert!((v - (2048.0f64 / 34.0).sqrt()).abs() < 1e-12);
        assert!((v - 7.761).abs() < 1e-3);
        assert!(lower_moment_fv(1223, 1, 1).is_none());
        assert_eq!(lower_moment_fv(1224, 1, 1).unwrap(), 6.0);

        assert!((lower_error(2048, 1, 1).unwrap() - 6.761).abs() < 1e-3);
        assert_eq!(lower_error(1224, 1, 1).unwrap(), 5.0);
        assert!(lower_error(100, 2, 1).is_none());
    }

    #[test]
    fn sandwich_and_monotonicity() {
        for &m in &[1u32, 2] {
            for n in 1..=2 {
                let mut prev_lower = -f64::INFINITY;
                let mut prev_upper = 0.0;
                for &d in &[1224usize, 2048, 4096, 3_000_000, 9_000_000] {
                    if let Some(le) = lower_error(d, n, m) {
                        assert!(
                            le < upper_error(d, n),
                            "sandwich violated at d={d}, n={n}, m={m}"
                        );
                        assert!(le > prev_lower, "lower bound not increasing in d");
                        prev_lower = le;
                    }
                    let ue = upper_error(d, n);
                    assert!(ue > prev_upper, "upper bound not increasing in d");
                    prev_upper = ue;
                }
            }
        }
    }

    #[test]
    fn super_polynomial_growth_witness() {
        // n = 1, p = 0.25: lower_error(d,1,1) / d^0.25 increases along the grid.
        let ratios: Vec<f64> = [2048usize, 8192, 32768]
            .iter()
            .map(|&d| lower_error(d, 1, 1).unwrap() / (d as f64).powf(0.25))
            .collect();
        assert!(ratios[0] < ratios[1] && ratios[1] < ratios[2], "{ratios:?}");
    }

    #[test]
    fn report_is_consistent() {
        let r = report(1224, 1, 1);
        assert!(r.feasible);
        assert_eq!(r.lower_error, Some(5.0));
        assert_eq!(r.threshold_d, 1224.0);
        let r = report(1223, 1, 1);
        assert!(!r.feasible);
        assert!(r.lower_error.is_none() && r.lower_moment_fv.is_none());
    }
}
