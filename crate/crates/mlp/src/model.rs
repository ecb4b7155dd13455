//! Problem data for the semilinear heat equation on the time horizon [0, 1]:
//! terminal condition `g`, nonlinearity `f` acting on the gradient estimate,
//! and (when available) a closed-form solution used as the error reference.
//!
//! The counterexample instance is `g(x) = |x_1|` with
//! `f(v) = (Σ_{j≥2} v_j²)^{1/2}`; its solution depends on `x_1` only and is
//! the Gaussian-smoothed absolute value, implemented here through `erf`.
//! Quadrature stays out of this module so the tests can use it as an
//! independent oracle.

use statrs::function::erf::erf;
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{MlpError, Result};

/// A total scalar field on R^d.
pub type ScalarField = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

type ValueFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;
type GradientFn = Arc<dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync>;

/// Closed-form reference solution: value and spatial gradient.
#[derive(Clone)]
pub struct ExactSolution {
    value: ValueFn,
    gradient: GradientFn,
}

impl ExactSolution {
    pub fn new(
        value: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(f64, &[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        ExactSolution {
            value: Arc::new(value),
            gradient: Arc::new(gradient),
        }
    }

    pub fn value(&self, t: f64, x: &[f64]) -> f64 {
        (self.value)(t, x)
    }

    pub fn gradient(&self, t: f64, x: &[f64]) -> Vec<f64> {
        (self.gradient)(t, x)
    }
}

/// The problem data `(d, g, f)` plus the optional exact solution and the
/// optional increment majorant `gamma` with `|g(v1) - g(v2)| <= gamma(v1 - v2)`.
#[derive(Clone)]
pub struct ProblemSpec {
    d: usize,
    g: ScalarField,
    f: ScalarField,
    gamma: Option<ScalarField>,
    exact: Option<ExactSolution>,
}

impl ProblemSpec {
    pub fn new(
        d: usize,
        g: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if d == 0 {
            return Err(MlpError::param("problem dimension must be >= 1"));
        }
        Ok(ProblemSpec {
            d,
            g: Arc::new(g),
            f: Arc::new(f),
            gamma: None,
            exact: None,
        })
    }

    pub fn with_exact(mut self, exact: ExactSolution) -> Self {
        self.exact = Some(exact);
        self
    }

    pub fn with_gamma(mut self, gamma: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.gamma = Some(Arc::new(gamma));
        self
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn g(&self, x: &[f64]) -> f64 {
        (self.g)(x)
    }

    pub fn f(&self, v: &[f64]) -> f64 {
        (self.f)(v)
    }

    pub fn gamma(&self, v: &[f64]) -> Option<f64> {
        self.gamma.as_ref().map(|gm| gm(v))
    }

    pub fn exact(&self) -> Option<&ExactSolution> {
        self.exact.as_ref()
    }
}

/// The counterexample instance in dimension `d`: `g(x) = |x_1|`,
/// `f(v) = (Σ_{j=2}^d v_j²)^{1/2}` (identically 0 for d = 1), with the
/// closed-form solution wired in.
pub fn counterexample(d: usize) -> Result<ProblemSpec> {
    if d == 0 {
        return Err(MlpError::param("counterexample requires d >= 1"));
    }
    let spec = ProblemSpec::new(
        d,
        |x: &[f64]| x[0].abs(),
        |v: &[f64]| v[1..].iter().map(|z| z * z).sum::<f64>().sqrt(),
    )?;
    Ok(spec
        .with_gamma(|v: &[f64]| v[0].abs())
        .with_exact(ExactSolution::new(
            |t, x| value_unchecked(t, x[0]),
            |t, x| {
                let mut grad = vec![0.0; x.len()];
                grad[0] = gradient_coord1_unchecked(t, x[0]);
                grad
            },
        )))
}

// E|a + sigma Z| for sigma = sqrt(1 - t); valid for t in [0, 1].
fn value_unchecked(t: f64, a: f64) -> f64 {
    let var = 1.0 - t;
    if var == 0.0 {
        return a.abs();
    }
    let sigma = var.sqrt();
    sigma * (2.0 / PI).sqrt() * (-a * a / (2.0 * var)).exp()
        + a * erf(a / (sigma * std::f64::consts::SQRT_2))
}

fn gradient_coord1_unchecked(t: f64, a: f64) -> f64 {
    erf(a / (2.0 * (1.0 - t)).sqrt())
}

/// Solution value of the counterexample at `(t, x)`:
/// `E|x_1 + sqrt(1-t) Z| = sigma sqrt(2/pi) exp(-a²/2sigma²) + a erf(a/(sigma sqrt 2))`,
/// reducing to `|x_1|` at t = 1.
pub fn exact_value(t: f64, x: &[f64]) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(MlpError::param(format!(
            "exact_value requires t in [0,1], got t={t}"
        )));
    }
    if x.is_empty() {
        return Err(MlpError::param("exact_value requires a nonempty point"));
    }
    Ok(value_unchecked(t, x[0]))
}

/// Spatial gradient of the counterexample solution at `(t, x)` with t < 1:
/// coordinate 1 is `erf(x_1 / sqrt(2(1-t)))`, all others are exactly 0.
pub fn exact_gradient(t: f64, x: &[f64]) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&t) {
        return Err(MlpError::param(format!(
            "exact_gradient requires t in [0,1), got t={t}"
        )));
    }
    if x.is_empty() {
        return Err(MlpError::param("exact_gradient requires a nonempty point"));
    }
    let mut grad = vec![0.0; x.len()];
    grad[0] = gradient_coord1_unchecked(t, x[0]);
    Ok(grad)
}

/// Central-difference residual `∂_t u + ½ Δu + f(∇u)` of the problem's exact
/// solution at `(t, x)`; near zero when that solution solves the PDE.
pub fn pde_residual(spec: &ProblemSpec, t: f64, x: &[f64], h: f64) -> Result<f64> {
    let exact = spec.exact().ok_or(MlpError::MissingExactSolution)?;
    if h.is_nan() || h <= 0.0 {
        return Err(MlpError::param("pde_residual requires h > 0"));
    }
    if !(t > h && t < 1.0 - h) {
        return Err(MlpError::param(format!(
            "pde_residual requires t in (h, 1-h), got t={t}, h={h}"
        )));
    }
    if x.len() != spec.d() {
        return Err(MlpError::param(format!(
            "point has dimension {}, problem has d={}",
            x.len(),
            spec.d()
        )));
    }
    let u0 = exact.value(t, x);
    let du_dt = (exact.value(t + h, x) - exact.value(t - h, x)) / (2.0 * h);

    let mut laplacian = 0.0;
    let mut grad = vec![0.0; x.len()];
    let mut xp = x.to_vec();
    for j in 0..x.len() {
        let orig = xp[j];
        xp[j] = orig + h;
        let up = exact.value(t, &xp);
        xp[j] = orig - h;
        let um = exact.value(t, &xp);
        xp[j] = orig;
        laplacian += (up - 2.0 * u0 + um) / (h * h);
        grad[j] = (up - um) / (2.0 * h);
    }
    Ok(du_dt + 0.5 * laplacian + spec.f(&grad))
}
