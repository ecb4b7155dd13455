//! Desk-scale checks of the quantitative statements the estimator relies on:
//! the variance lower bound for sums of i.i.d. random fields, the nested
//! time-kernel integral bound, the law of the intermediate time, and the
//! stochastic-control story behind the counterexample's value function.
//! Everything here is independent of the recursion in `engine`.

use rayon::prelude::*;
use std::sync::Arc;

use crate::engine::{evaluate, MlpParams};
use crate::error::{MlpError, Result};
use crate::index_rng::{derive_stream, MultiIndex, StreamHandle};
use crate::model::{counterexample, exact_value, pde_residual};
use crate::stats::{ks_statistic, mean_and_sample_variance, standard_error};

fn unif(s: &mut StreamHandle, lo: f64, hi: f64) -> f64 {
    let u = (s.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    lo + (hi - lo) * u
}

/// Outcome of the variance-inequality check over exactly enumerated
/// finite-support instances.
#[derive(Debug, Clone)]
pub struct VarianceLemmaReport {
    pub trials: u64,
    pub violations: u64,
    /// Minimum of `Var[Σ F_i(X)] - n Var[F_1(X)]` over all trials.
    pub worst_margin: f64,
    pub pass: bool,
}

/// Check `Var[Σ_{i=1}^n F_i(X)] >= n Var[F_1(X)]` on random finite-support
/// joint laws: `X` uniform on `field_card` points, the i.i.d. fields given by
/// a random value table over a small field-state space. Both sides are
/// computed by exact enumeration of the product space, so the only tolerance
/// is 1e-12 of rounding.
pub fn check_variance_lemma(
    trials: u64,
    n: usize,
    field_card: usize,
    seed: u64,
) -> Result<VarianceLemmaReport> {
    if n == 0 {
        return Err(MlpError::param("variance lemma requires n >= 1"));
    }
    if field_card == 0 {
        return Err(MlpError::param("variance lemma requires field_card >= 1"));
    }
    let state_card = field_card.max(2);
    if (state_card as f64).powi(n as i32) * field_card as f64 > 5e7 {
        return Err(MlpError::param(
            "variance lemma enumeration too large; shrink n or field_card",
        ));
    }
    let mut stream = derive_stream(seed, 0, &MultiIndex::root(0));
    let mut violations = 0u64;
    let mut worst = f64::INFINITY;
    for _ in 0..trials {
        let table: Vec<Vec<f64>> = (0..state_card)
            .map(|_| (0..field_card).map(|_| unif(&mut stream, -1.0, 1.0)).collect())
            .collect();
        let margin = variance_lemma_margin(&table, n);
        worst = worst.min(margin);
        if margin < -1e-12 {
            violations += 1;
        }
    }
    Ok(VarianceLemmaReport {
        trials,
        violations,
        worst_margin: worst,
        pass: violations == 0,
    })
}

/// `Var[Σ F_i(X)] - n Var[F_1(X)]` by exact enumeration of
/// `(state_1, ..., state_n, x)`; `table[state][x]` is the field value.
pub fn variance_lemma_margin(table: &[Vec<f64>], n: usize) -> f64 {
    let state_card = table.len();
    let x_card = table[0].len();

    // Left side: odometer over the n field states times the argument.
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut states = vec![0usize; n];
    let total_states = (state_card as u64).pow(n as u32);
    for _ in 0..total_states {
        for x in 0..x_card {
            let y: f64 = states.iter().map(|&s| table[s][x]).sum();
            sum += y;
            sum_sq += y * y;
        }
        for slot in states.iter_mut() {
            *slot += 1;
            if *slot < state_card {
                break;
            }
            *slot = 0;
        }
    }
    let count = (total_states * x_card as u64) as f64;
    let mean = sum / count;
    let lhs = sum_sq / count - mean * mean;

    // Right side: n times the variance of a single field evaluation.
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    for row in table {
        for &v in row {
            s1 += v;
            s2 += v * v;
        }
    }
    let c1 = (state_card * x_card) as f64;
    let m1 = s1 / c1;
    let rhs = (n as f64) * (s2 / c1 - m1 * m1);
    lhs - rhs
}

/// Result of the nested kernel-integral quadrature.
#[derive(Debug, Clone)]
pub struct KernelIntegralReport {
    pub t0: f64,
    pub k: u32,
    pub grid: usize,
    pub value: f64,
    pub bound: f64,
    pub within_bound: bool,
}

/// Evaluate `∫_{t0}^1 ... ∫ ∏_{j=1}^k √(1-t_{j-1}) / √(t_j - t_{j-1}) dt_k...dt_1`
/// by iterated quadrature and compare against the bound `2^k`.
///
/// Each level substitutes `t_j = t_{j-1} + w²`, which removes the square-root
/// singularity at the lower limit and leaves a smooth integrand for composite
/// Simpson with `grid` intervals per level.
pub fn check_kernel_integral(t0: f64, k: u32, grid: usize) -> Result<KernelIntegralReport> {
    if !(0.0..1.0).contains(&t0) {
        return Err(MlpError::param(format!(
            "kernel integral requires t0 in [0,1), got {t0}"
        )));
    }
    if !(1..=3).contains(&k) {
        return Err(MlpError::param(format!(
            "kernel integral supports k in {{1,2,3}}, got {k}"
        )));
    }
    if grid < 4 {
        return Err(MlpError::param("kernel integral requires grid >= 4"));
    }
    if (grid as f64).powi(k as i32) > 1e9 {
        return Err(MlpError::param(
            "kernel integral grid too fine for the requested nesting depth",
        ));
    }
    let value = nested_kernel_integral(t0, k, grid);
    let bound = 2.0f64.powi(k as i32);
    Ok(KernelIntegralReport {
        t0,
        k,
        grid,
        value,
        bound,
        within_bound: value <= bound + 1e-6,
    })
}

fn nested_kernel_integral(t: f64, k: u32, grid: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let upper = (1.0 - t).sqrt();
    // t + w² can land one ulp above 1 at the endpoint; clamp before recursing.
    let inner = |w: f64| nested_kernel_integral((t + w * w).min(1.0), k - 1, grid);
    2.0 * upper * simpson(0.0, upper, grid, inner)
}

fn simpson(lo: f64, hi: f64, intervals: usize, f: impl Fn(f64) -> f64) -> f64 {
    let n = intervals + intervals % 2;
    let h = (hi - lo) / n as f64;
    let mut acc = f(lo) + f(hi);
    for k in 1..n {
        acc += if k % 2 == 1 { 4.0 } else { 2.0 } * f(lo + k as f64 * h);
    }
    acc * h / 3.0
}

/// Outcome of the intermediate-time law check.
#[derive(Debug, Clone)]
pub struct RDensityReport {
    pub t: f64,
    pub samples: u64,
    pub ks: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Draw `R_t` repeatedly and compare the empirical CDF against the closed
/// form `F(s) = √((s-t)/(1-t))`; passes when the Kolmogorov-Smirnov statistic
/// stays below `1.63/√samples`.
pub fn check_r_density(t: f64, samples: u64, seed: u64) -> Result<RDensityReport> {
    if samples < 10_000 {
        return Err(MlpError::param("density check requires samples >= 10^4"));
    }
    let mut stream = derive_stream(seed, 0, &MultiIndex::root(0));
    let mut xs = Vec::with_capacity(samples as usize);
    for _ in 0..samples {
        xs.push(stream.sample_r_time(t)?);
    }
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let ks = ks_statistic(&xs, |s| ((s - t) / (1.0 - t)).max(0.0).sqrt());
    let threshold = 1.63 / (samples as f64).sqrt();
    Ok(RDensityReport {
        t,
        samples,
        ks,
        threshold,
        pass: ks < threshold,
    })
}

type DriftFn = Arc<dyn Fn(f64, &[f64], &mut StreamHandle) -> Vec<f64> + Send + Sync>;

/// An admissible control: a drift with first coordinate zero and Euclidean
/// norm at most one. Both constraints are re-checked on every call.
#[derive(Clone)]
pub struct ControlPolicy {
    name: String,
    drift: DriftFn,
}

impl ControlPolicy {
    pub fn new(
        name: impl Into<String>,
        drift: impl Fn(f64, &[f64], &mut StreamHandle) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        ControlPolicy {
            name: name.into(),
            drift: Arc::new(drift),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// The uncontrolled diffusion.
    pub fn zero(d: usize) -> Self {
        ControlPolicy::new("zero", move |_, _, _| vec![0.0; d])
    }

    fn drift_checked(&self, t: f64, x: &[f64], stream: &mut StreamHandle) -> Result<Vec<f64>> {
        let c = (self.drift)(t, x, stream);
        if c.len() != x.len() {
            return Err(MlpError::InadmissibleControl {
                t,
                reason: format!("policy '{}' returned wrong dimension", self.name),
            });
        }
        if c[0] != 0.0 {
            return Err(MlpError::InadmissibleControl {
                t,
                reason: format!("policy '{}' drives the first coordinate", self.name),
            });
        }
        let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1.0 + 1e-12 {
            return Err(MlpError::InadmissibleControl {
                t,
                reason: format!("policy '{}' has norm {norm} > 1", self.name),
            });
        }
        Ok(c)
    }
}

/// A small family of admissible policies with parameters drawn from `seed`:
/// a scaled constant direction, a time-switching bang-bang control, and a
/// state-feedback control, all confined to coordinates 2..d.
pub fn random_policies(d: usize, count: usize, seed: u64) -> Vec<ControlPolicy> {
    let mut stream = derive_stream(seed, 0, &MultiIndex::root(1));
    (0..count)
        .map(|k| {
            let kind = k % 3;
            match kind {
                0 => {
                    let mut dir = vec![0.0; d];
                    for v in dir.iter_mut().skip(1) {
                        *v = unif(&mut stream, -1.0, 1.0);
                    }
                    let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
                    let scale = unif(&mut stream, 0.2, 1.0);
                    if norm > 0.0 {
                        for v in dir.iter_mut() {
                            *v *= scale / norm;
                        }
                    }
                    ControlPolicy::new(format!("constant-{k}"), move |_, _, _| dir.clone())
                }
                1 => {
                    let omega = unif(&mut stream, 5.0, 40.0);
                    let phase = unif(&mut stream, 0.0, std::f64::consts::TAU);
                    let amp = unif(&mut stream, 0.3, 1.0);
                    ControlPolicy::new(format!("bang-bang-{k}"), move |t, x, _| {
                        let d = x.len();
                        let mut c = vec![0.0; d];
                        if d > 1 {
                            let per = amp / ((d - 1) as f64).sqrt();
                            for (j, v) in c.iter_mut().enumerate().skip(1) {
                                let s = (omega * t + phase + j as f64).sin();
                                *v = if s >= 0.0 { per } else { -per };
                            }
                        }
                        c
                    })
                }
                _ => {
                    let gain = unif(&mut stream, 0.5, 3.0);
                    ControlPolicy::new(format!("feedback-{k}"), move |_, x, _| {
                        let mut c = vec![0.0; x.len()];
                        for (j, v) in c.iter_mut().enumerate().skip(1) {
                            *v = -gain * x[j];
                        }
                        let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
                        if norm > 1.0 {
                            for v in c.iter_mut() {
                                *v /= norm;
                            }
                        }
                        c
                    })
                }
            }
        })
        .collect()
}

/// Monte Carlo payoff of the controlled diffusion.
#[derive(Debug, Clone)]
pub struct ControlValue {
    pub mean: f64,
    pub std_error: f64,
    pub paths: u64,
}

/// Euler simulation of `X' = C dt + dW` from `(s, x)` to time 1 with
/// `(1-s)/steps` step size; the payoff is `|X_1(1)|`, the absolute value of
/// the first coordinate at the terminal time.
///
/// Discretization bias is immaterial for the payoff: the first coordinate is
/// driftless, so its terminal law is exact at any step count.
pub fn simulate_control_value(
    d: usize,
    s: f64,
    x: &[f64],
    policy: &ControlPolicy,
    paths: u64,
    steps: u32,
    seed: u64,
) -> Result<ControlValue> {
    if d == 0 || x.len() != d {
        return Err(MlpError::param("control simulation: bad dimension"));
    }
    if !(0.0..1.0).contains(&s) {
        return Err(MlpError::param(format!(
            "control simulation requires start time in [0,1), got {s}"
        )));
    }
    if steps < 10 {
        return Err(MlpError::param("control simulation requires steps >= 10"));
    }
    if paths < 2 {
        return Err(MlpError::param("control simulation requires paths >= 2"));
    }
    let dt = (1.0 - s) / steps as f64;
    let payoffs = (0..paths)
        .into_par_iter()
        .map(|p| {
            let mut stream = derive_stream(seed, p, &MultiIndex::root(0));
            let mut state = x.to_vec();
            for k in 0..steps {
                let tk = s + k as f64 * dt;
                let c = policy.drift_checked(tk, &state, &mut stream)?;
                let dw = stream.sample_brownian_increment(d, dt)?;
                for j in 0..d {
                    state[j] += c[j] * dt + dw[j];
                }
            }
            Ok(state[0].abs())
        })
        .collect::<Result<Vec<f64>>>()?;
    let (mean, _) = mean_and_sample_variance(&payoffs);
    Ok(ControlValue {
        mean,
        std_error: standard_error(&payoffs),
        paths,
    })
}

/// One comparison of a simulated control value against the closed form.
#[derive(Debug, Clone)]
pub struct ValueCase {
    pub s: f64,
    pub x1: f64,
    pub policy: String,
    pub sim_mean: f64,
    pub sim_se: f64,
    pub exact: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct ValueFunctionReport {
    pub cases: Vec<ValueCase>,
    pub pass: bool,
}

/// At random `(s, x)`, simulate the payoff under the zero policy and three
/// random admissible policies and require agreement with the closed-form
/// value within five standard errors each.
pub fn check_value_function(
    d: usize,
    trials: u32,
    paths: u64,
    steps: u32,
    seed: u64,
) -> Result<ValueFunctionReport> {
    let mut stream = derive_stream(seed, 0, &MultiIndex::root(2));
    let mut cases = Vec::new();
    let mut all_pass = true;
    for trial in 0..trials {
        let s = unif(&mut stream, 0.0, 0.9);
        let x: Vec<f64> = (0..d).map(|_| unif(&mut stream, -2.0, 2.0)).collect();
        let exact = exact_value(s, &x)?;
        let mut policies = vec![ControlPolicy::zero(d)];
        policies.extend(random_policies(d, 3, seed ^ (trial as u64 + 1)));
        for (pi, policy) in policies.iter().enumerate() {
            let sim = simulate_control_value(
                d,
                s,
                &x,
                policy,
                paths,
                steps,
                seed.wrapping_add(1000 * trial as u64 + pi as u64),
            )?;
            let pass = (sim.mean - exact).abs() <= 5.0 * sim.std_error;
            all_pass &= pass;
            cases.push(ValueCase {
                s,
                x1: x[0],
                policy: policy.name().to_string(),
                sim_mean: sim.mean,
                sim_se: sim.std_error,
                exact,
                pass,
            });
        }
    }
    Ok(ValueFunctionReport {
        cases,
        pass: all_pass,
    })
}

/// Outcome of the PDE-residual spot check on the counterexample.
#[derive(Debug, Clone)]
pub struct PdeReport {
    pub points: u32,
    pub max_abs_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Finite-difference residual of the counterexample's closed form at random
/// interior points; the true residual is identically zero.
pub fn check_pde_residuals(d: usize, points: u32, h: f64, seed: u64) -> Result<PdeReport> {
    let spec = counterexample(d)?;
    let mut stream = derive_stream(seed, 0, &MultiIndex::root(3));
    let mut max_abs: f64 = 0.0;
    for _ in 0..points {
        let t = unif(&mut stream, 2.0 * h, 0.9);
        let x: Vec<f64> = (0..d).map(|_| unif(&mut stream, -2.0, 2.0)).collect();
        let r = pde_residual(&spec, t, &x, h)?;
        max_abs = max_abs.max(r.abs());
    }
    let tolerance = 1e-5;
    Ok(PdeReport {
        points,
        max_abs_residual: max_abs,
        tolerance,
        pass: max_abs < tolerance,
    })
}

/// Outcome of the reflected-noise antisymmetry check.
#[derive(Debug, Clone)]
pub struct MirrorReport {
    pub cases: u32,
    pub max_abs_diff: f64,
    pub pass: bool,
}

/// On random small instances, the gradient estimate with every increment
/// negated equals the negated estimate at the reflected point, with the same
/// seeds and the same time draws. Rounding is the only slack.
pub fn check_mirror_antisymmetry(cases: u32, seed: u64) -> Result<MirrorReport> {
    let mut stream = derive_stream(seed, 0, &MultiIndex::root(4));
    let theta = MultiIndex::root(0);
    let mut max_diff: f64 = 0.0;
    for case in 0..cases {
        let d = 1 + (stream.next_u64() % 6) as usize;
        let n = 1 + (stream.next_u64() % 3) as i32;
        let m = 1 + (stream.next_u64() % 2) as u32;
        let t = unif(&mut stream, 0.0, 0.9);
        let x: Vec<f64> = (0..d).map(|_| unif(&mut stream, -2.0, 2.0)).collect();
        let neg_x: Vec<f64> = x.iter().map(|a| -a).collect();
        let spec = counterexample(d)?;
        let plain = MlpParams {
            n,
            m,
            master_seed: seed ^ (case as u64 + 17),
            replication: 0,
            mirror: false,
        };
        let mirrored = MlpParams {
            mirror: true,
            ..plain
        };
        let v_plain = evaluate(&spec, &plain, &theta, t, &neg_x)?.v;
        let v_mirror = evaluate(&spec, &mirrored, &theta, t, &x)?.v;
        for (a, b) in v_mirror.iter().zip(&v_plain) {
            let scale = a.abs().max(b.abs()).max(1.0);
            max_diff = max_diff.max((a + b).abs() / scale);
        }
    }
    Ok(MirrorReport {
        cases,
        max_abs_diff: max_diff,
        pass: max_diff <= 1e-12,
    })
}
