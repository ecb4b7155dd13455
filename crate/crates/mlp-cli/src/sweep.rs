//! Dimension sweeps: run the estimator across a dimension grid, attach the
//! closed-form bounds, and emit one CSV row per dimension.
//!
//! The CSV schema is fixed:
//! `d,n,m,reps,estimate,std_error,lower_bound,upper_bound,feasible,nodes,gaussians,wall_ms`
//! with empty strings for absent bounds. Replications map to rows in a fixed
//! order and are aggregated sequentially, so the numeric columns are
//! byte-identical for any thread count; `wall_ms` is measured time and can be
//! left empty via [`SweepConfig::omit_timing`] when byte-identical files are
//! required.

use anyhow::{bail, Context, Result};
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use mlp::bounds;
use mlp::engine::{error_l2, second_moment_fv};
use mlp::model::counterexample;

pub const CSV_HEADER: &str =
    "d,n,m,reps,estimate,std_error,lower_bound,upper_bound,feasible,nodes,gaussians,wall_ms";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    Error,
    MomentFv,
    Growth,
}

impl SweepMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "error" => Ok(SweepMode::Error),
            "moment-fV" | "moment-fv" => Ok(SweepMode::MomentFv),
            "growth" => Ok(SweepMode::Growth),
            other => bail!("unknown mode '{other}' (expected error, moment-fV or growth)"),
        }
    }
}

/// Evaluation point: start time plus either the origin or an explicit vector.
#[derive(Debug, Clone)]
pub struct PointSpec {
    pub t: f64,
    pub x: XSpec,
}

#[derive(Debug, Clone)]
pub enum XSpec {
    Origin,
    Explicit(Vec<f64>),
}

impl Default for PointSpec {
    fn default() -> Self {
        PointSpec {
            t: 0.0,
            x: XSpec::Origin,
        }
    }
}

impl PointSpec {
    /// Parse `t=<time>,x=origin` or `t=<time>,x=<v1:v2:...>`.
    pub fn parse(s: &str) -> Result<Self> {
        let mut t = None;
        let mut x = None;
        for part in s.split(',') {
            let (key, value) = part
                .split_once('=')
                .with_context(|| format!("bad point component '{part}'"))?;
            match key.trim() {
                "t" => t = Some(value.trim().parse::<f64>().context("bad t value")?),
                "x" => {
                    let value = value.trim();
                    x = Some(if value == "origin" {
                        XSpec::Origin
                    } else {
                        XSpec::Explicit(
                            value
                                .split(':')
                                .map(|v| v.trim().parse::<f64>().context("bad x coordinate"))
                                .collect::<Result<Vec<f64>>>()?,
                        )
                    });
                }
                other => bail!("unknown point key '{other}'"),
            }
        }
        Ok(PointSpec {
            t: t.unwrap_or(0.0),
            x: x.unwrap_or(XSpec::Origin),
        })
    }

    fn coords(&self, d: usize) -> Result<Vec<f64>> {
        match &self.x {
            XSpec::Origin => Ok(vec![0.0; d]),
            XSpec::Explicit(v) => {
                if v.len() != d {
                    bail!("explicit point has {} coordinates but d={d}", v.len());
                }
                Ok(v.clone())
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub dims: Vec<usize>,
    pub n: i32,
    pub m: u32,
    /// Couple the base to the depth (`m = n` per row).
    pub couple: bool,
    pub reps: u64,
    pub seed: u64,
    pub point: PointSpec,
    pub mode: SweepMode,
    /// Growth exponent for the `estimate / d^p` report.
    pub p: f64,
    pub out: Option<PathBuf>,
    pub check: bool,
    pub omit_timing: bool,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty() {
            bail!("dims must be nonempty");
        }
        if !self.dims.windows(2).all(|w| w[0] < w[1]) {
            bail!("dims must be strictly increasing");
        }
        if self.reps < 2 {
            bail!("reps must be >= 2");
        }
        if !(0.0..1.0).contains(&self.point.t) {
            bail!("point time must lie in [0,1)");
        }
        if let XSpec::Explicit(v) = &self.point.x {
            if self.dims.len() > 1 {
                bail!("an explicit point requires a single dimension in --dims");
            }
            if v.len() != self.dims[0] {
                bail!("explicit point has {} coordinates but d={}", v.len(), self.dims[0]);
            }
        }
        if self.couple && self.n < 1 {
            bail!("--couple requires n >= 1");
        }
        Ok(())
    }

    fn m_for_row(&self) -> u32 {
        if self.couple {
            self.n.max(0) as u32
        } else {
            self.m
        }
    }
}

/// One CSV row of a sweep.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub d: usize,
    pub n: i32,
    pub m: u32,
    pub reps: u64,
    pub estimate: f64,
    pub std_error: f64,
    pub lower_bound: Option<f64>,
    pub upper_bound: Option<f64>,
    pub feasible: bool,
    pub nodes: u64,
    pub gaussians: u64,
    pub wall_ms: Option<u128>,
}

impl SweepRow {
    fn csv_line(&self) -> String {
        let opt = |v: &Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.d,
            self.n,
            self.m,
            self.reps,
            self.estimate,
            self.std_error,
            opt(&self.lower_bound),
            opt(&self.upper_bound),
            self.feasible,
            self.nodes,
            self.gaussians,
            self.wall_ms.map(|w| w.to_string()).unwrap_or_default()
        )
    }
}

/// Run the sweep described by `config` (inside the caller's rayon pool).
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let m = config.m_for_row();
    let mut rows = Vec::with_capacity(config.dims.len());
    for &d in &config.dims {
        let spec = counterexample(d)?;
        let x = config.point.coords(d)?;
        let started = Instant::now();
        let (estimate, std_error, nodes, gaussians) = match config.mode {
            SweepMode::MomentFv => {
                let est = second_moment_fv(&spec, config.n, m, config.seed, config.reps, config.point.t, &x)?;
                (est.estimate, est.std_error, est.work.nodes, est.work.gaussians)
            }
            SweepMode::Error | SweepMode::Growth => {
                let est = error_l2(&spec, config.n, m, config.seed, config.reps, config.point.t, &x)?;
                (est.rmse, est.std_error, est.work.nodes, est.work.gaussians)
            }
        };
        let wall_ms = if config.omit_timing {
            None
        } else {
            Some(started.elapsed().as_millis())
        };
        let (lower_bound, upper_bound, feasible) = if config.n >= 1 {
            match config.mode {
                SweepMode::MomentFv => (
                    bounds::lower_moment_fv(d, config.n, m),
                    Some(bounds::upper_moment_fv(d, config.n)),
                    bounds::lower_moment_fv(d, config.n, m).is_some(),
                ),
                SweepMode::Error | SweepMode::Growth => (
                    bounds::lower_error(d, config.n, m),
                    Some(bounds::upper_error(d, config.n)),
                    bounds::lower_error(d, config.n, m).is_some(),
                ),
            }
        } else {
            (None, None, false)
        };
        rows.push(SweepRow {
            d,
            n: config.n,
            m,
            reps: config.reps,
            estimate,
            std_error,
            lower_bound,
            upper_bound,
            feasible,
            nodes,
            gaussians,
            wall_ms,
        });
    }
    Ok(rows)
}

/// Render rows as the fixed-schema CSV.
pub fn csv_string(rows: &[SweepRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.csv_line());
        out.push('\n');
    }
    out
}

/// Post-run assertions for `--check` mode. Returns human-readable violations;
/// empty means everything holds.
pub fn check_rows(mode: SweepMode, p: f64, rows: &[SweepRow]) -> Vec<String> {
    let mut violations = Vec::new();
    for row in rows {
        if let Some(lower) = row.lower_bound {
            if row.estimate < lower - 4.0 * row.std_error {
                violations.push(format!(
                    "d={}: estimate {} below lower bound {} - 4 se {}",
                    row.d, row.estimate, lower, row.std_error
                ));
            }
        }
        if let Some(upper) = row.upper_bound {
            if row.estimate > upper {
                violations.push(format!(
                    "d={}: estimate {} above upper bound {upper}",
                    row.d, row.estimate
                ));
            }
        }
    }
    if mode == SweepMode::Growth {
        for w in rows.windows(2) {
            let r0 = w[0].estimate / (w[0].d as f64).powf(p);
            let r1 = w[1].estimate / (w[1].d as f64).powf(p);
            if r1 <= r0 {
                violations.push(format!(
                    "growth ratio not increasing: d={} gives {r0}, d={} gives {r1}",
                    w[0].d, w[1].d
                ));
            }
        }
    }
    violations
}

/// Human-readable sweep summary, including the growth ratios when requested.
pub fn render_text(mode: SweepMode, p: f64, rows: &[SweepRow]) -> String {
    let mut out = String::new();
    for row in rows {
        let _ = write!(
            out,
            "d={} n={} m={} reps={} estimate={:.6} se={:.3e}",
            row.d, row.n, row.m, row.reps, row.estimate, row.std_error
        );
        match (row.lower_bound, row.upper_bound) {
            (Some(lo), Some(hi)) => {
                let _ = write!(out, " bounds=[{lo:.4}, {hi:.4}]");
            }
            (None, Some(hi)) => {
                let _ = write!(out, " bounds=[infeasible, {hi:.4}]");
            }
            _ => {}
        }
        if mode == SweepMode::Growth {
            let _ = write!(out, " ratio(d^-{p})={:.6}", row.estimate / (row.d as f64).powf(p));
        }
        out.push('\n');
    }
    out
}
