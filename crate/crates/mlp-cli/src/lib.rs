//! Library side of the harness: sweep execution, CSV rendering, the
//! verification suite driver, and bound formatting. The binary in `main.rs`
//! is a thin argument-parsing layer over these functions so they stay
//! testable in-process.

pub mod sweep;
pub mod verify_suite;

use mlp::bounds::BoundReport;
use serde_json::json;

/// Render a bound report as line-oriented text.
pub fn bounds_text(report: &BoundReport) -> String {
    format!("{report}")
}

/// Render a bound report as JSON with the same fields.
pub fn bounds_json(report: &BoundReport) -> serde_json::Value {
    json!({
        "d": report.d,
        "n": report.n,
        "m": report.m,
        "c1": report.c1,
        "c2": report.c2,
        "upper_moment_fV": report.upper_moment_fv,
        "upper_error": report.upper_error,
        "lower_moment_fV": report.lower_moment_fv,
        "lower_error": report.lower_error,
        "feasible": report.feasible,
        "threshold_d": if report.threshold_d.is_finite() {
            json!(report.threshold_d)
        } else {
            json!("overflow")
        },
    })
}
