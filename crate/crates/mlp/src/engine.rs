//! Full-history recursive estimator of the solution/gradient pair `(U, V)`.
//!
//! A node of depth `n` at `(t, x)` combines a terminal-condition sample
//! average over indices `(theta, 0, -i)` with, for each level `l < n`, a
//! telescoped difference of the nonlinearity applied to the gradient
//! estimates of depths `l` and `l - 1`. Both inner estimates of a level term
//! are evaluated at the same intermediate point `(R_t, x + dW)`, drawn from
//! the stream of index `(theta, l, i)`; the negative-side child lives at
//! index `(theta, -l, i)`. That coupling is the telescoping structure and
//! must not be broken.
//!
//! Draw order per node is fixed: first the terminal children in ascending
//! `i`, then levels in ascending `l` with ascending `i`, each node stream
//! yielding the time fraction before the Gaussian increment. Every stream is
//! a pure function of `(master_seed, replication, theta)`, so `evaluate` is
//! deterministic regardless of thread schedule.

use rayon::prelude::*;

use crate::error::{MlpError, Result};
use crate::index_rng::{derive_stream, MultiIndex};
use crate::model::ProblemSpec;
use crate::stats::sqrt_mean_with_se;

/// Hard depth guard: the node count grows super-exponentially in `n`.
pub const MAX_DEPTH: i32 = 12;

/// Parameters of one estimator evaluation.
///
/// `mirror` negates every Gaussian increment before use (time-fraction draws
/// are unchanged), realizing the reflected-noise estimator used by the
/// antisymmetry check.
#[derive(Debug, Clone, Copy)]
pub struct MlpParams {
    pub n: i32,
    pub m: u32,
    pub master_seed: u64,
    pub replication: u64,
    pub mirror: bool,
}

impl MlpParams {
    pub fn new(n: i32, m: u32, master_seed: u64) -> Self {
        MlpParams {
            n,
            m,
            master_seed,
            replication: 0,
            mirror: false,
        }
    }
}

/// Work accumulated over one or more evaluations: recursion nodes visited,
/// nonlinearity applications, and d-dimensional Gaussian increments drawn.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WorkCounters {
    pub nodes: u64,
    pub f_evals: u64,
    pub gaussians: u64,
}

impl WorkCounters {
    fn add(&mut self, other: &WorkCounters) {
        self.nodes += other.nodes;
        self.f_evals += other.f_evals;
        self.gaussians += other.gaussians;
    }
}

/// Value estimate, gradient estimate, and work counters of one evaluation.
#[derive(Debug, Clone)]
pub struct EvalResult {
    pub u: f64,
    pub v: Vec<f64>,
    pub nodes: u64,
    pub f_evals: u64,
    pub gaussians: u64,
}

/// Replicated second moment of `f ∘ V`: `sqrt(mean f(V)²)` with its
/// delta-method standard error.
#[derive(Debug, Clone)]
pub struct MomentEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub reps: u64,
    pub work: WorkCounters,
}

/// Replicated L² error against the exact solution:
/// `sqrt(mean(|U - u|² + ||V - ∇u||²))` with its delta-method standard error.
#[derive(Debug, Clone)]
pub struct ErrorEstimate {
    pub reps: u64,
    pub rmse: f64,
    pub std_error: f64,
    pub work: WorkCounters,
}

/// The time-sampling density `ϱ(t, s) = 1 / (2 √(1-t) √(s-t))`.
pub fn time_kernel(t: f64, s: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&t) {
        return Err(MlpError::param(format!(
            "time_kernel requires t in [0,1), got t={t}"
        )));
    }
    if !(s > t && s <= 1.0) {
        return Err(MlpError::param(format!(
            "time_kernel requires s in (t,1], got s={s}, t={t}"
        )));
    }
    Ok(1.0 / (2.0 * (1.0 - t).sqrt() * (s - t).sqrt()))
}

struct NodeCtx<'a> {
    spec: &'a ProblemSpec,
    master_seed: u64,
    replication: u64,
    m: u64,
    mirror: bool,
    f_zero: f64,
    work: WorkCounters,
}

impl NodeCtx<'_> {
    fn pow_m(&self, e: i32) -> Result<u64> {
        self.m.checked_pow(e as u32).ok_or_else(|| {
            MlpError::param(format!("sample count m^{e} overflows with m={}", self.m))
        })
    }

    fn eval_node(&mut self, n: i32, theta: &MultiIndex, t: f64, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let d = self.spec.d();
        if n <= 0 {
            return Ok((0.0, vec![0.0; d]));
        }
        self.work.nodes += 1;
        let one_minus_t = 1.0 - t;
        let sqrt_one_minus_t = one_minus_t.sqrt();
        let gx = self.spec.g(x);
        let mut u = gx;
        let mut v = vec![0.0; d];
        let mut y = vec![0.0; d];

        // Terminal-condition term over indices (theta, 0, -i).
        let mn = self.pow_m(n)?;
        let inv_mn = 1.0 / mn as f64;
        for i in 1..=mn {
            let child = theta.child(0, -(i as i64));
            let mut stream = derive_stream(self.master_seed, self.replication, &child);
            let mut dw = stream.sample_brownian_increment(d, one_minus_t)?;
            self.work.gaussians += 1;
            if self.mirror {
                for w in &mut dw {
                    *w = -*w;
                }
            }
            for j in 0..d {
                y[j] = x[j] + dw[j];
            }
            let gterm = (self.spec.g(&y) - gx) * inv_mn;
            u += gterm;
            for j in 0..d {
                v[j] += gterm * dw[j] / one_minus_t;
            }
        }

        // Level terms over indices (theta, l, i); the l = 0 summand uses
        // f(V_0) = f(0) directly and spawns no children.
        for l in 0..n {
            let count = self.pow_m(n - l)?;
            let inv_count = 1.0 / count as f64;
            for i in 1..=count {
                let node_idx = theta.child(l as i64, i as i64);
                let mut stream = derive_stream(self.master_seed, self.replication, &node_idx);
                let r = stream.sample_time_fraction();
                let dt_node = one_minus_t * r; // = R_t - t, the exact drawn duration
                let s = t + dt_node;
                let mut dw = stream.sample_brownian_increment(d, dt_node)?;
                self.work.gaussians += 1;
                if self.mirror {
                    for w in &mut dw {
                        *w = -*w;
                    }
                }
                let y_node: Vec<f64> = x.iter().zip(&dw).map(|(a, b)| a + b).collect();

                let fv_pos = if l == 0 {
                    self.work.f_evals += 1;
                    self.f_zero
                } else {
                    let (_, v_child) = self.eval_node(l, &node_idx, s, &y_node)?;
                    self.work.f_evals += 1;
                    self.spec.f(&v_child)
                };
                let fv_neg = if l == 0 {
                    0.0
                } else if l == 1 {
                    self.work.f_evals += 1;
                    self.f_zero
                } else {
                    let neg_idx = theta.child(-(l as i64), i as i64);
                    let (_, v_child) = self.eval_node(l - 1, &neg_idx, s, &y_node)?;
                    self.work.f_evals += 1;
                    self.spec.f(&v_child)
                };

                // 1/ϱ(t, R_t) in product form; never divide by the kernel.
                let inv_rho = 2.0 * sqrt_one_minus_t * dt_node.sqrt();
                let scale = (fv_pos - fv_neg) * inv_rho * inv_count;
                u += scale;
                for j in 0..d {
                    v[j] += scale * dw[j] / dt_node;
                }
            }
        }

        if !u.is_finite() || v.iter().any(|w| !w.is_finite()) {
            let what = if u.is_finite() { "gradient estimate" } else { "value estimate" };
            return Err(MlpError::NonFinite {
                theta: theta.to_string(),
                what,
            });
        }
        Ok((u, v))
    }
}

/// Evaluate the depth-`n` estimator at `(t, x)` under multi-index `theta`.
/// Depths `n <= 0` return exact zeros without consuming randomness.
pub fn evaluate(
    spec: &ProblemSpec,
    params: &MlpParams,
    theta: &MultiIndex,
    t: f64,
    x: &[f64],
) -> Result<EvalResult> {
    if x.len() != spec.d() {
        return Err(MlpError::param(format!(
            "point has dimension {}, problem has d={}",
            x.len(),
            spec.d()
        )));
    }
    if !(0.0..1.0).contains(&t) {
        return Err(MlpError::param(format!(
            "evaluate requires t in [0,1), got t={t}"
        )));
    }
    if params.m == 0 {
        return Err(MlpError::param("evaluate requires m >= 1"));
    }
    if params.n > MAX_DEPTH {
        return Err(MlpError::param(format!(
            "depth n={} exceeds the guard n <= {MAX_DEPTH}",
            params.n
        )));
    }
    if params.n <= 0 {
        return Ok(EvalResult {
            u: 0.0,
            v: vec![0.0; spec.d()],
            nodes: 0,
            f_evals: 0,
            gaussians: 0,
        });
    }
    let f_zero = spec.f(&vec![0.0; spec.d()]);
    let mut ctx = NodeCtx {
        spec,
        master_seed: params.master_seed,
        replication: params.replication,
        m: params.m as u64,
        mirror: params.mirror,
        f_zero,
        work: WorkCounters::default(),
    };
    let (u, v) = ctx.eval_node(params.n, theta, t, x)?;
    Ok(EvalResult {
        u,
        v,
        nodes: ctx.work.nodes,
        f_evals: ctx.work.f_evals,
        gaussians: ctx.work.gaussians,
    })
}

/// Exact number of recursion nodes `evaluate` visits:
/// `C(n) = 1 + Σ_{l=1}^{n-1} m^{n-l} (C(l) + C(l-1))` with `C(0) = C(-1) = 0`.
pub fn node_count(n: i32, m: u32) -> u64 {
    if n <= 0 {
        return 0;
    }
    let n = n as usize;
    let m = m as u128;
    let mut c = vec![0u128; n + 1];
    c[1] = 1;
    for k in 2..=n {
        let mut total: u128 = 1;
        for l in 1..k {
            let pow = m
                .checked_pow((k - l) as u32)
                .unwrap_or(u128::MAX);
            total = total.saturating_add(pow.saturating_mul(c[l] + c[l - 1]));
        }
        c[k] = total;
    }
    u64::try_from(c[n]).unwrap_or(u64::MAX)
}

fn replicate<T, F>(reps: u64, per_rep: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    (0..reps)
        .into_par_iter()
        .map(per_rep)
        .collect::<Result<Vec<T>>>()
}

/// Replicated estimate of `(E[f(V_{n,m})(t,x)²])^{1/2}` over independent
/// replications (replication index varies, theta = (0)).
pub fn second_moment_fv(
    spec: &ProblemSpec,
    n: i32,
    m: u32,
    master_seed: u64,
    reps: u64,
    t: f64,
    x: &[f64],
) -> Result<MomentEstimate> {
    if reps < 2 {
        return Err(MlpError::param("second_moment_fv requires reps >= 2"));
    }
    if n <= 0 {
        // The estimator is identically zero: f(V) = f(0) with no sampling noise.
        let fv = spec.f(&vec![0.0; spec.d()]);
        return Ok(MomentEstimate {
            estimate: fv.abs(),
            std_error: 0.0,
            reps,
            work: WorkCounters {
                nodes: 0,
                f_evals: reps,
                gaussians: 0,
            },
        });
    }
    let theta = MultiIndex::root(0);
    let per_rep = replicate(reps, |rep| {
        let params = MlpParams {
            n,
            m,
            master_seed,
            replication: rep,
            mirror: false,
        };
        let res = evaluate(spec, &params, &theta, t, x)?;
        let fv = spec.f(&res.v);
        Ok((
            fv * fv,
            WorkCounters {
                nodes: res.nodes,
                f_evals: res.f_evals + 1,
                gaussians: res.gaussians,
            },
        ))
    })?;
    let ys: Vec<f64> = per_rep.iter().map(|(y, _)| *y).collect();
    let mut work = WorkCounters::default();
    for (_, w) in &per_rep {
        work.add(w);
    }
    let (estimate, std_error) = sqrt_mean_with_se(&ys);
    Ok(MomentEstimate {
        estimate,
        std_error,
        reps,
        work,
    })
}

/// Replicated estimate of the joint L² error
/// `(E[|U - u(t,x)|² + ||V - ∇u(t,x)||²])^{1/2}`; requires the exact solution.
pub fn error_l2(
    spec: &ProblemSpec,
    n: i32,
    m: u32,
    master_seed: u64,
    reps: u64,
    t: f64,
    x: &[f64],
) -> Result<ErrorEstimate> {
    if reps < 2 {
        return Err(MlpError::param("error_l2 requires reps >= 2"));
    }
    let exact = spec.exact().ok_or(MlpError::MissingExactSolution)?;
    let u_ref = exact.value(t, x);
    let grad_ref = exact.gradient(t, x);
    if n <= 0 {
        // The estimator is identically zero: the error is the exact norm of
        // the reference pair, with zero variance.
        let e2 = u_ref * u_ref + grad_ref.iter().map(|g| g * g).sum::<f64>();
        return Ok(ErrorEstimate {
            reps,
            rmse: e2.sqrt(),
            std_error: 0.0,
            work: WorkCounters::default(),
        });
    }
    let theta = MultiIndex::root(0);
    let per_rep = replicate(reps, |rep| {
        let params = MlpParams {
            n,
            m,
            master_seed,
            replication: rep,
            mirror: false,
        };
        let res = evaluate(spec, &params, &theta, t, x)?;
        let du = res.u - u_ref;
        let mut e2 = du * du;
        for (vj, gj) in res.v.iter().zip(&grad_ref) {
            let dv = vj - gj;
            e2 += dv * dv;
        }
        Ok((
            e2,
            WorkCounters {
                nodes: res.nodes,
                f_evals: res.f_evals,
                gaussians: res.gaussians,
            },
        ))
    })?;
    let ys: Vec<f64> = per_rep.iter().map(|(y, _)| *y).collect();
    let mut work = WorkCounters::default();
    for (_, w) in &per_rep {
        work.add(w);
    }
    let (rmse, std_error) = sqrt_mean_with_se(&ys);
    Ok(ErrorEstimate {
        reps,
        rmse,
        std_error,
        work,
    })
}
