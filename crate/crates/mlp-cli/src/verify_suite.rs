//! Drives the verification checks with their default parameters and formats
//! the pass/fail report.

use anyhow::{bail, Result};
use serde_json::json;

use mlp::verify;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuiteCheck {
    Variance,
    Kernel,
    Density,
    Control,
    Pde,
    Mirror,
}

pub const ALL_CHECKS: [SuiteCheck; 6] = [
    SuiteCheck::Variance,
    SuiteCheck::Kernel,
    SuiteCheck::Density,
    SuiteCheck::Control,
    SuiteCheck::Pde,
    SuiteCheck::Mirror,
];

impl SuiteCheck {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "variance" => SuiteCheck::Variance,
            "kernel" => SuiteCheck::Kernel,
            "density" => SuiteCheck::Density,
            "control" => SuiteCheck::Control,
            "pde" => SuiteCheck::Pde,
            "mirror" => SuiteCheck::Mirror,
            other => bail!("unknown check '{other}'"),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            SuiteCheck::Variance => "variance",
            SuiteCheck::Kernel => "kernel",
            SuiteCheck::Density => "density",
            SuiteCheck::Control => "control",
            SuiteCheck::Pde => "pde",
            SuiteCheck::Mirror => "mirror",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

/// Run the selected checks with default parameters.
pub fn run_verify(checks: &[SuiteCheck], seed: u64) -> Result<Vec<CheckOutcome>> {
    let mut outcomes = Vec::new();
    for &check in checks {
        outcomes.push(match check {
            SuiteCheck::Variance => variance_check(seed)?,
            SuiteCheck::Kernel => kernel_check()?,
            SuiteCheck::Density => density_check(seed)?,
            SuiteCheck::Control => control_check(seed)?,
            SuiteCheck::Pde => pde_check(seed)?,
            SuiteCheck::Mirror => mirror_check(seed)?,
        });
    }
    Ok(outcomes)
}

fn variance_check(seed: u64) -> Result<CheckOutcome> {
    let rep = verify::check_variance_lemma(1000, 3, 4, seed)?;
    Ok(CheckOutcome {
        name: "variance",
        pass: rep.pass,
        detail: format!(
            "{} instances, {} violations, worst margin {:.3e}",
            rep.trials, rep.violations, rep.worst_margin
        ),
    })
}

fn kernel_check() -> Result<CheckOutcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for &t0 in &[0.0, 0.3, 0.9] {
        let rep = verify::check_kernel_integral(t0, 1, 2000)?;
        let closed = 2.0 * (1.0 - t0);
        let ok = rep.within_bound && (rep.value - closed).abs() < 1e-6;
        pass &= ok;
        parts.push(format!("k=1 t0={t0}: {:.8} (closed {closed:.8})", rep.value));
    }
    for (k, grid) in [(2u32, 800usize), (3, 96)] {
        let rep = verify::check_kernel_integral(0.0, k, grid)?;
        let doubled = verify::check_kernel_integral(0.0, k, grid * 2)?;
        let converged = (rep.value - doubled.value).abs() < 1e-4;
        pass &= rep.within_bound && converged;
        parts.push(format!(
            "k={k}: {:.6} <= {} (doubling delta {:.2e})",
            rep.value,
            rep.bound,
            (rep.value - doubled.value).abs()
        ));
    }
    Ok(CheckOutcome {
        name: "kernel",
        pass,
        detail: parts.join("; "),
    })
}

fn density_check(seed: u64) -> Result<CheckOutcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, &t) in [0.0, 0.5, 0.9].iter().enumerate() {
        let rep = verify::check_r_density(t, 100_000, seed + i as u64)?;
        pass &= rep.pass;
        parts.push(format!("t={t}: KS {:.5} < {:.5}", rep.ks, rep.threshold));
    }
    Ok(CheckOutcome {
        name: "density",
        pass,
        detail: parts.join("; "),
    })
}

fn control_check(seed: u64) -> Result<CheckOutcome> {
    let d = 3;
    let zero = verify::simulate_control_value(
        d,
        0.0,
        &vec![0.0; d],
        &verify::ControlPolicy::zero(d),
        100_000,
        20,
        seed,
    )?;
    let target = (2.0 / std::f64::consts::PI).sqrt();
    let mut pass = (zero.mean - target).abs() <= 4.0 * zero.std_error;
    let mut parts = vec![format!(
        "zero policy {:.5} vs sqrt(2/pi) {:.5} (se {:.1e})",
        zero.mean, target, zero.std_error
    )];
    for (idx, policy) in verify::random_policies(d, 3, seed ^ 0x51).iter().enumerate() {
        let v = verify::simulate_control_value(
            d,
            0.0,
            &vec![0.0; d],
            policy,
            40_000,
            20,
            seed ^ 0x52 ^ (idx as u64),
        )?;
        let combined = (zero.std_error.powi(2) + v.std_error.powi(2)).sqrt();
        let ok = (v.mean - zero.mean).abs() <= 4.0 * combined;
        pass &= ok;
        parts.push(format!("{}: {:.5}", policy.name(), v.mean));
    }
    let value_rep = verify::check_value_function(d, 5, 20_000, 25, seed ^ 0x53)?;
    pass &= value_rep.pass;
    parts.push(format!("{} value-function cases", value_rep.cases.len()));
    Ok(CheckOutcome {
        name: "control",
        pass,
        detail: parts.join("; "),
    })
}

fn pde_check(seed: u64) -> Result<CheckOutcome> {
    let rep = verify::check_pde_residuals(5, 20, 1e-4, seed)?;
    Ok(CheckOutcome {
        name: "pde",
        pass: rep.pass,
        detail: format!(
            "{} points, max |residual| {:.3e} < {:.0e}",
            rep.points, rep.max_abs_residual, rep.tolerance
        ),
    })
}

fn mirror_check(seed: u64) -> Result<CheckOutcome> {
    let rep = verify::check_mirror_antisymmetry(50, seed)?;
    Ok(CheckOutcome {
        name: "mirror",
        pass: rep.pass,
        detail: format!(
            "{} cases, max relative deviation {:.3e}",
            rep.cases, rep.max_abs_diff
        ),
    })
}

pub fn render_text(outcomes: &[CheckOutcome]) -> String {
    let mut out = String::new();
    for o in outcomes {
        out.push_str(if o.pass { "PASS " } else { "FAIL " });
        out.push_str(o.name);
        out.push_str(": ");
        out.push_str(&o.detail);
        out.push('\n');
    }
    out
}

pub fn render_json(outcomes: &[CheckOutcome]) -> serde_json::Value {
    json!({
        "pass": outcomes.iter().all(|o| o.pass),
        "checks": outcomes.iter().map(|o| json!({
            "name": o.name,
            "pass": o.pass,
            "detail": o.detail,
        })).collect::<Vec<_>>(),
    })
}
