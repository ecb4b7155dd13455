//! Acceptance suite: one test per criterion, each printing a PASS line with
//! its measured margin (visible with `cargo test -- --nocapture`) and
//! asserting the stated tolerance and runtime budget.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use mlp::bounds;
use mlp::engine::{error_l2, second_moment_fv};
use mlp::index_rng::{derive_stream, MultiIndex};
use mlp::model::{counterexample, exact_gradient, exact_value};
use mlp::verify;

const SEED: u64 = 42;

fn assert_runtime(criterion: &str, started: Instant, budget: Duration) {
    let elapsed = started.elapsed();
    assert!(
        elapsed < budget,
        "{criterion}: runtime {elapsed:?} exceeded budget {budget:?}"
    );
}

/// Criterion 1: residual of the closed form under the PDE operator stays
/// below 1e-5 at 20 random interior points, and the closed-form gradient
/// matches central finite differences within 1e-6.
#[test]
fn criterion_01_exact_solution_validation() {
    let started = Instant::now();
    let d = 5;
    let rep = verify::check_pde_residuals(d, 20, 1e-4, SEED).unwrap();
    assert!(
        rep.pass,
        "max |residual| = {} >= 1e-5",
        rep.max_abs_residual
    );

    let mut stream = derive_stream(SEED, 0, &MultiIndex::root(1));
    let h = 1e-5;
    let mut max_dev: f64 = 0.0;
    for _ in 0..20 {
        let t = (stream.next_u64() >> 11) as f64 / (1u64 << 53) as f64 * 0.9;
        let x: Vec<f64> = (0..d)
            .map(|_| ((stream.next_u64() >> 11) as f64 / (1u64 << 53) as f64) * 4.0 - 2.0)
            .collect();
        let grad = exact_gradient(t, &x).unwrap();
        for j in 0..d {
            let mut xp = x.clone();
            xp[j] += h;
            let up = exact_value(t, &xp).unwrap();
            xp[j] -= 2.0 * h;
            let um = exact_value(t, &xp).unwrap();
            let fd = (up - um) / (2.0 * h);
            max_dev = max_dev.max((grad[j] - fd).abs());
        }
    }
    assert!(max_dev < 1e-6, "gradient vs finite differences: {max_dev}");
    assert_runtime("criterion 1", started, Duration::from_secs(1));
    println!(
        "PASS criterion 1: max |pde residual| {:.2e} < 1e-5, max gradient deviation {:.2e} < 1e-6",
        rep.max_abs_residual, max_dev
    );
}

/// Criterion 2: at depth n = 1, m = 1 the joint L2 error at the origin has
/// the closed form sqrt(d + 3 - 2/pi); the measured value must sit within 5%
/// for d in {1, 64, 2048}.
#[test]
fn criterion_02_depth_one_error_oracle() {
    let started = Instant::now();
    let mut lines = Vec::new();
    for &d in &[1usize, 64, 2048] {
        let spec = counterexample(d).unwrap();
        let x = vec![0.0; d];
        let est = error_l2(&spec, 1, 1, SEED, 4000, 0.0, &x).unwrap();
        let oracle = (d as f64 + 3.0 - 2.0 / PI).sqrt();
        let rel = (est.rmse - oracle).abs() / oracle;
        assert!(
            rel < 0.05,
            "d={d}: rmse {} vs oracle {oracle} (relative {rel})",
            est.rmse
        );
        lines.push(format!("d={d}: {:.4} vs {:.4} ({:+.2}%)", est.rmse, oracle, 100.0 * rel));
    }
    assert_runtime("criterion 2", started, Duration::from_secs(30));
    println!("PASS criterion 2: {}", lines.join("; "));
}

/// Criterion 3: in the feasible regime the measured second moment of f∘V sits
/// between the lower bound (minus 4 standard errors) and the upper bound.
#[test]
fn criterion_03_moment_lower_and_upper_bound() {
    let started = Instant::now();
    let mut lines = Vec::new();
    for &d in &[1224usize, 2048, 4096] {
        let spec = counterexample(d).unwrap();
        let x = vec![0.0; d];
        let est = second_moment_fv(&spec, 1, 1, SEED, 4000, 0.0, &x).unwrap();
        let lower = bounds::lower_moment_fv(d, 1, 1).expect("grid must be feasible");
        let upper = bounds::upper_moment_fv(d, 1);
        assert!(
            est.estimate >= lower - 4.0 * est.std_error,
            "d={d}: {} below lower bound {lower}",
            est.estimate
        );
        assert!(
            est.estimate <= upper,
            "d={d}: {} above upper bound {upper}",
            est.estimate
        );
        let oracle = (d as f64 - 1.0).sqrt();
        assert!(
            (est.estimate - oracle).abs() / oracle < 0.05,
            "d={d}: {} not within 5% of sqrt(d-1) = {oracle}",
            est.estimate
        );
        lines.push(format!(
            "d={d}: {lower:.3} <= {:.3} <= {upper:.3}",
            est.estimate
        ));
    }
    assert_runtime("criterion 3", started, Duration::from_secs(60));
    println!("PASS criterion 3: {}", lines.join("; "));
}

/// Criterion 4: the joint L2 error is sandwiched between the error lower
/// bound (minus 4 standard errors) and the error upper bound.
#[test]
fn criterion_04_error_sandwich() {
    let started = Instant::now();
    let mut lines = Vec::new();
    for &d in &[1224usize, 2048, 4096] {
        let spec = counterexample(d).unwrap();
        let x = vec![0.0; d];
        let est = error_l2(&spec, 1, 1, SEED, 4000, 0.0, &x).unwrap();
        let lower = bounds::lower_error(d, 1, 1).expect("grid must be feasible");
        let upper = bounds::upper_error(d, 1);
        assert!(
            est.rmse >= lower - 4.0 * est.std_error && est.rmse <= upper,
            "d={d}: {} outside [{lower}, {upper}]",
            est.rmse
        );
        lines.push(format!("d={d}: {lower:.3} <= {:.3} <= {upper:.0}", est.rmse));
    }
    assert_runtime("criterion 4", started, Duration::from_secs(60));
    println!("PASS criterion 4: {}", lines.join("; "));
}

/// Criterion 5: with n = 1 > 2p for p = 0.25, the ratio error / d^p grows
/// strictly, by at least 1.3x per 4x dimension step.
#[test]
fn criterion_05_growth_in_dimension() {
    let started = Instant::now();
    let mut ratios = Vec::new();
    for &d in &[256usize, 1024, 4096] {
        let spec = counterexample(d).unwrap();
        let x = vec![0.0; d];
        let est = error_l2(&spec, 1, 1, SEED, 4000, 0.0, &x).unwrap();
        ratios.push(est.rmse / (d as f64).powf(0.25));
    }
    for w in ratios.windows(2) {
        assert!(w[1] > w[0], "ratio not increasing: {ratios:?}");
        assert!(
            w[1] / w[0] >= 1.3,
            "ratio step {} below 1.3: {ratios:?}",
            w[1] / w[0]
        );
    }
    assert_runtime("criterion 5", started, Duration::from_secs(60));
    println!(
        "PASS criterion 5: ratios {:.4} -> {:.4} -> {:.4} (steps {:.3}, {:.3})",
        ratios[0],
        ratios[1],
        ratios[2],
        ratios[1] / ratios[0],
        ratios[2] / ratios[1]
    );
}

/// Criterion 6: the variance inequality holds on 1000 exactly enumerated
/// finite-support instances with no violation beyond 1e-12 rounding.
#[test]
fn criterion_06_variance_inequality_suite() {
    let started = Instant::now();
    let rep = verify::check_variance_lemma(1000, 3, 4, SEED).unwrap();
    assert_eq!(rep.violations, 0, "worst margin {}", rep.worst_margin);
    assert_runtime("criterion 6", started, Duration::from_secs(5));
    println!(
        "PASS criterion 6: 1000 instances, 0 violations, worst margin {:.2e}",
        rep.worst_margin
    );
}

/// Criterion 7: the nested kernel integral matches its closed form at depth 1
/// and stays below 2^k at depths 2 and 3 with grid-doubling convergence.
#[test]
fn criterion_07_kernel_integral_quadrature() {
    let started = Instant::now();
    for &t0 in &[0.0, 0.3, 0.9] {
        let rep = verify::check_kernel_integral(t0, 1, 2000).unwrap();
        let closed = 2.0 * (1.0 - t0);
        assert!(
            (rep.value - closed).abs() < 1e-6,
            "k=1 t0={t0}: {} vs {closed}",
            rep.value
        );
    }
    let mut lines = Vec::new();
    for (k, grid) in [(2u32, 800usize), (3, 96)] {
        let rep = verify::check_kernel_integral(0.0, k, grid).unwrap();
        let doubled = verify::check_kernel_integral(0.0, k, grid * 2).unwrap();
        assert!(rep.within_bound, "k={k}: {} above {}", rep.value, rep.bound);
        assert!(
            (rep.value - doubled.value).abs() < 1e-4,
            "k={k}: doubling moved value by {}",
            (rep.value - doubled.value).abs()
        );
        lines.push(format!("k={k}: {:.6} <= {}", rep.value, rep.bound));
    }
    assert_runtime("criterion 7", started, Duration::from_secs(10));
    println!("PASS criterion 7: depth-1 closed form verified; {}", lines.join("; "));
}

/// Criterion 8: the sampled intermediate-time law matches the closed-form CDF
/// at the alpha ~ 0.01 Kolmogorov-Smirnov level.
#[test]
fn criterion_08_intermediate_time_density() {
    let started = Instant::now();
    let mut lines = Vec::new();
    for (i, &t) in [0.0, 0.5, 0.9].iter().enumerate() {
        let rep = verify::check_r_density(t, 100_000, SEED + i as u64).unwrap();
        assert!(rep.pass, "t={t}: KS {} >= {}", rep.ks, rep.threshold);
        lines.push(format!("t={t}: KS {:.5}", rep.ks));
    }
    assert_runtime("criterion 8", started, Duration::from_secs(2));
    println!("PASS criterion 8: {} (threshold 0.00516)", lines.join("; "));
}

/// Criterion 9: the control simulator reproduces sqrt(2/pi) under the zero
/// policy, admissible policies cannot shift the value, and the simulated
/// payoff agrees with the closed-form value function at random points.
#[test]
fn criterion_09_stochastic_control() {
    let started = Instant::now();
    let d = 3;
    let zero = verify::simulate_control_value(
        d,
        0.0,
        &vec![0.0; d],
        &verify::ControlPolicy::zero(d),
        100_000,
        20,
        SEED,
    )
    .unwrap();
    let target = (2.0 / PI).sqrt();
    assert!(
        (zero.mean - target).abs() <= 4.0 * zero.std_error,
        "zero policy {} vs {target} (se {})",
        zero.mean,
        zero.std_error
    );
    for (idx, policy) in verify::random_policies(d, 3, SEED ^ 0xA1).iter().enumerate() {
        let v = verify::simulate_control_value(
            d,
            0.0,
            &vec![0.0; d],
            policy,
            40_000,
            20,
            SEED ^ 0xA2 ^ (idx as u64),
        )
        .unwrap();
        let combined = (zero.std_error.powi(2) + v.std_error.powi(2)).sqrt();
        assert!(
            (v.mean - zero.mean).abs() <= 4.0 * combined,
            "policy {} moved the value: {} vs {}",
            policy.name(),
            v.mean,
            zero.mean
        );
    }
    let rep = verify::check_value_function(d, 5, 20_000, 25, SEED ^ 0xA3).unwrap();
    assert!(rep.pass, "value-function cases failed: {:#?}", rep.cases);
    assert_runtime("criterion 9", started, Duration::from_secs(30));
    println!(
        "PASS criterion 9: zero policy {:.5} vs {:.5}; 3 policies invariant; {} value cases agree",
        zero.mean,
        target,
        rep.cases.len()
    );
}

/// Criterion 10: negating every Gaussian increment flips the gradient
/// estimate at the reflected point, to rounding, on 50 random cases.
#[test]
fn criterion_10_mirror_antisymmetry() {
    let started = Instant::now();
    let rep = verify::check_mirror_antisymmetry(50, SEED).unwrap();
    assert!(rep.pass, "max relative deviation {}", rep.max_abs_diff);
    assert_runtime("criterion 10", started, Duration::from_secs(5));
    println!(
        "PASS criterion 10: 50 cases, max relative deviation {:.2e}",
        rep.max_abs_diff
    );
}

/// Stretch (not gating): depth 2 in the feasible regime needs d above the
/// threshold 2,996,352; at d = 3,000,000 the measured second moment must
/// clear the lower bound d/(34 sqrt 2) minus 4 standard errors.
/// Runs in roughly a minute and peaks around 1 GB with the 4-thread pool;
/// invoke with `cargo test -p mlp --test acceptance -- --ignored`.
#[test]
#[ignore = "stretch scale: ~1 min, ~1 GB"]
fn stretch_depth_two_feasible_dimension() {
    let started = Instant::now();
    let d = 3_000_000usize;
    let (n, m) = (2, 1u32);
    assert!((d as f64) >= bounds::feasible_dimension(n, m));
    let spec = counterexample(d).unwrap();
    let x = vec![0.0; d];
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap();
    let est = pool
        .install(|| second_moment_fv(&spec, n, m, SEED, 200, 0.0, &x))
        .unwrap();
    let lower = bounds::lower_moment_fv(d, n, m).unwrap();
    assert!(
        est.estimate >= lower - 4.0 * est.std_error,
        "estimate {} below lower bound {lower} (se {})",
        est.estimate,
        est.std_error
    );
    println!(
        "PASS stretch: estimate {:.1} >= lower bound {:.1} - 4 se ({:.1}); {} nodes, {} increments, {:?}",
        est.estimate,
        lower,
        est.std_error,
        est.work.nodes,
        est.work.gaussians,
        started.elapsed()
    );
}
