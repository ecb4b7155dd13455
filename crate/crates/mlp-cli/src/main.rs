use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use mlp_cli::sweep::{check_rows, csv_string, render_text, run_sweep, PointSpec, SweepConfig, SweepMode};
use mlp_cli::verify_suite::{self, SuiteCheck, ALL_CHECKS};
use mlp_cli::{bounds_json, bounds_text};

#[derive(Parser)]
#[command(name = "mlp", about = "Multilevel Picard experiment harness", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the estimator over a dimension grid and write a CSV report.
    Sweep(SweepArgs),
    /// Run the verification suite.
    Verify(VerifyArgs),
    /// Print the closed-form bounds for one (d, n, m).
    Bounds(BoundsArgs),
}

#[derive(Args)]
struct SweepArgs {
    /// Dimensions, strictly increasing (e.g. 1224,2048,4096).
    #[arg(long, value_delimiter = ',', required = true)]
    dims: Vec<usize>,
    /// Recursion depth n.
    #[arg(long, default_value_t = 1)]
    n: i32,
    /// Branching base m.
    #[arg(long, default_value_t = 1)]
    m: u32,
    /// Couple the base to the depth (use m = n).
    #[arg(long, default_value_t = false)]
    couple: bool,
    /// Independent replications per dimension.
    #[arg(long, default_value_t = 4000)]
    reps: u64,
    /// Master seed.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Estimator: error, moment-fV, or growth.
    #[arg(long, default_value = "error")]
    mode: String,
    /// Growth exponent p for the estimate/d^p report.
    #[arg(long, default_value_t = 0.25)]
    p: f64,
    /// Evaluation point, e.g. "t=0,x=origin" or "t=0.25,x=0.1:0.2".
    #[arg(long, default_value = "t=0,x=origin")]
    point: String,
    /// CSV output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Assert the bound/growth relations and exit nonzero on violation.
    #[arg(long, default_value_t = false)]
    check: bool,
    /// Worker threads (default: hardware parallelism).
    #[arg(long)]
    threads: Option<usize>,
    /// Leave the wall_ms column empty so reruns are byte-identical.
    #[arg(long, default_value_t = false)]
    omit_timing: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Comma-separated subset of variance,kernel,density,control,pde,mirror
    /// (default: all).
    #[arg(long, value_delimiter = ',')]
    suite: Vec<String>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Emit the report as JSON.
    #[arg(long, default_value_t = false)]
    json: bool,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    d: usize,
    #[arg(long)]
    n: i32,
    #[arg(long)]
    m: u32,
    #[arg(long, default_value_t = false)]
    json: bool,
}

fn in_pool<T: Send>(threads: Option<usize>, run: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match threads {
        None => run(),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .context("building thread pool")?;
            pool.install(run)
        }
    }
}

fn cmd_sweep(args: SweepArgs) -> Result<bool> {
    let config = SweepConfig {
        dims: args.dims,
        n: args.n,
        m: args.m,
        couple: args.couple,
        reps: args.reps,
        seed: args.seed,
        point: PointSpec::parse(&args.point)?,
        mode: SweepMode::parse(&args.mode)?,
        p: args.p,
        out: args.out,
        check: args.check,
        omit_timing: args.omit_timing,
    };
    let rows = in_pool(args.threads, || run_sweep(&config))?;
    print!("{}", render_text(config.mode, config.p, &rows));
    if let Some(path) = &config.out {
        std::fs::write(path, csv_string(&rows))
            .with_context(|| format!("writing CSV to {}", path.display()))?;
        println!("wrote {}", path.display());
    }
    if config.check {
        let violations = check_rows(config.mode, config.p, &rows);
        for v in &violations {
            eprintln!("CHECK FAILED: {v}");
        }
        return Ok(violations.is_empty());
    }
    Ok(true)
}

fn cmd_verify(args: VerifyArgs) -> Result<bool> {
    let checks: Vec<SuiteCheck> = if args.suite.is_empty()
        || args.suite.iter().any(|s| s == "all")
    {
        ALL_CHECKS.to_vec()
    } else {
        args.suite
            .iter()
            .map(|s| SuiteCheck::parse(s))
            .collect::<Result<_>>()?
    };
    let seed = args.seed;
    let outcomes = in_pool(args.threads, move || verify_suite::run_verify(&checks, seed))?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&verify_suite::render_json(&outcomes))?);
    } else {
        print!("{}", verify_suite::render_text(&outcomes));
    }
    Ok(outcomes.iter().all(|o| o.pass))
}

fn cmd_bounds(args: BoundsArgs) -> Result<bool> {
    let report = mlp::bounds::report(args.d, args.n, args.m);
    if args.json {
        println!("{}", serde_json::to_string_pretty(&bounds_json(&report))?);
    } else {
        println!("{}", bounds_text(&report));
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Sweep(args) => cmd_sweep(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Bounds(args) => cmd_bounds(args),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
