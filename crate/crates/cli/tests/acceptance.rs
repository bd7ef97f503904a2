//! Acceptance criteria 1–10, run without the libtest harness so that every
//! criterion prints its `criterion N: PASS|FAIL` line. Exits non-zero when any
//! criterion fails. Pass criterion numbers as arguments to run a subset:
//! `cargo test -p freebm-cli --test acceptance -- 4 10`.

use std::process::{Command, ExitCode};
use std::time::Instant;

use num_complex::Complex64;
use num_rational::BigRational;

use freebm::exactcomb::{alternating_binomial_sum_check, stirling_first, stirling_via_log_series, verify_stirling_identity};
use freebm::freeconv::{support_nu, SupportInterval};
use freebm::moments::{
    exp_mgf_additive, fractional_moment_nu_series, m_n_polynomial,
    moments_nu_laguerre, moments_ode_oracle,
};
use freebm::rmtlab::{convergence_report, ConvergenceConfig, IncrementScheme, ModelKind};
use freebm::specfun::{euler_integral_1f1, kummer_1f1_real};
use freebm::suites::{
    detect_nu_support, endpoint_gap, grid_moment_deviation, kummer_transform_sample,
    DEFAULT_SUITE_SEED, DENSITY_ETA, DENSITY_POINTS, EDGE_ETA, EDGE_THRESHOLD,
};

type Outcome = (bool, String);

fn criterion_01_closed_form_matches_ode_oracle() -> Outcome {
    let start = Instant::now();
    let oracle = moments_ode_oracle(30);
    let mismatches: Vec<usize> = (0..=30).filter(|&n| m_n_polynomial(n) != oracle[n]).collect();
    (mismatches.is_empty(),
        format!("n <= 30 exact; mismatching orders {mismatches:?}; {:.2?}", start.elapsed()),
    )
}

fn criterion_02_stirling_identity() -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    for l in 1..=25 {
        for m in 1..=25 {
            if !verify_stirling_identity(l, m).expect("identity check").holds {
                failures.push((l, m));
            }
        }
    }
    (failures.is_empty(),
        format!("1 <= l, m <= 25 exact; failures {failures:?}; {:.2?}", start.elapsed()),
    )
}

fn criterion_03_pushforward_moments_match_laguerre() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for t in [0.1, 1.0, 4.0] {
        for n in 1..=25usize {
            let nf = n as f64;
            let via_1f1 = (nf * t / 2.0).exp() * exp_mgf_additive(Complex64::new(nf, 0.0), t).unwrap().re;
            let lag = moments_nu_laguerre(n, t).unwrap();
            worst = worst.max((via_1f1 - lag).abs() / lag.abs());
        }
    }
    (worst <= 1e-10,
        format!("max relative deviation {worst:.3e} (tol 1e-10); {:.2?}", start.elapsed()),
    )
}

fn criterion_04_fractional_routes_agree() -> Outcome {
    use rand::{Rng, SeedableRng};
    let start = Instant::now();
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(DEFAULT_SUITE_SEED);
    let mut alphas = Vec::with_capacity(40);
    while alphas.len() < 40 {
        let alpha = Complex64::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
        if alpha.norm() <= 5.0 && alpha.norm() > 1e-3 {
            alphas.push(alpha);
        }
    }
    let mut worst = 0.0f64;
    for t in [0.5, 2.0] {
        for &alpha in &alphas {
            let via_1f1 = (alpha * t / 2.0).exp() * exp_mgf_additive(alpha, t).unwrap();
            let via_series = fractional_moment_nu_series(alpha, t).unwrap();
            let scale = via_1f1.norm().max(via_series.norm());
            worst = worst.max((via_1f1 - via_series).norm() / scale);
        }
    }
    (worst <= 1e-10,
        format!("40 alphas x t in {{0.5, 2}}; max relative gap {worst:.3e} (tol 1e-10); {:.2?}", start.elapsed()),
    )
}

fn criterion_05_degree_and_leading_coefficient() -> Outcome {
    let mut bad = Vec::new();
    for n in 1..=30usize {
        let p = m_n_polynomial(n);
        let sign = if n % 2 == 0 { 1 } else { -1 };
        let want = BigRational::new(sign.into(), (n as i64 + 1).into());
        if p.degree() != Some(n) || p.leading_coefficient() != Some(&want) {
            bad.push(n);
        }
    }
    (bad.is_empty(), format!("deg m_n = n, [t^n] m_n = (-1)^n/(n+1) for n <= 30; failures {bad:?}"))
}

fn criterion_06_auxiliary_identities() -> Outcome {
    let start = Instant::now();
    let mut problems = Vec::new();
    for n in 0..=20usize {
        for k in 0..=n {
            let v = stirling_via_log_series(n, k).unwrap();
            if v != BigRational::from_integer(stirling_first(n, k)) {
                problems.push(format!("log series s({n},{k})"));
            }
        }
    }
    let kummer = kummer_transform_sample(50, DEFAULT_SUITE_SEED).unwrap();
    if !kummer.passed {
        problems.push(format!("kummer transformation: {}", kummer.detail));
    }
    let mut euler_worst = 0.0f64;
    for (a, b) in [(1.0, 2.0), (2.0, 3.0), (1.0, 3.0), (2.0, 5.0)] {
        for i in 0..=20 {
            let x = -5.0 + 0.5 * i as f64;
            let series = kummer_1f1_real(a, b, x).unwrap();
            let quad = euler_integral_1f1(a, b, x).unwrap();
            euler_worst = euler_worst.max((series - quad).abs() / series.abs());
        }
    }
    if euler_worst > 1e-10 {
        problems.push(format!("euler integral {euler_worst:.3e}"));
    }
    for big_n in 1..=30usize {
        for k in 0..=big_n {
            if !alternating_binomial_sum_check(big_n, k).unwrap() {
                problems.push(format!("alternating sum N={big_n} k={k}"));
            }
        }
    }
    (problems.is_empty(),
        format!(
            "log series n <= 20, {}, euler integral max {euler_worst:.3e}, alternating sums N <= 30; problems {problems:?}; {:.2?}",
            kummer.detail,
            start.elapsed()
        ),
    )
}

fn criterion_07_grid_moments() -> Outcome {
    let start = Instant::now();
    let mut parts = Vec::new();
    let mut passed = true;
    for t in [0.25, 1.0, 4.0] {
        let dev = grid_moment_deviation(t, 8, DENSITY_POINTS, DENSITY_ETA).unwrap();
        passed &= dev <= 1e-3;
        parts.push(format!("t={t}: {dev:.3e}"));
    }
    (passed,
        format!(
            "max relative moment error n <= 8, eta = {DENSITY_ETA}, {DENSITY_POINTS} points (tol 1e-3): {}; {:.2?}",
            parts.join(", "),
            start.elapsed()
        ),
    )
}

fn criterion_08_support_endpoints() -> Outcome {
    let start = Instant::now();
    let t = 2.0;
    let found = detect_nu_support(t, DENSITY_POINTS, EDGE_ETA, EDGE_THRESHOLD).unwrap();
    let closed: SupportInterval = support_nu(t).unwrap();
    let gap = endpoint_gap(&found, &closed);
    (gap <= 1e-2,
        format!(
            "detected [{:.6}, {:.6}] vs closed form [{:.6}, {:.6}]; worst relative gap {gap:.3e} (tol 1e-2); {:.2?}",
            found.lower,
            found.upper,
            closed.lower,
            closed.upper,
            start.elapsed()
        ),
    )
}

fn criterion_09_random_matrix_convergence() -> Outcome {
    let start = Instant::now();
    let config = |model, sizes: Vec<usize>, n_max| ConvergenceConfig {
        model,
        t: 1.0,
        sizes,
        trials: 50,
        n_max,
        seed: 7,
        steps: 200,
        scheme: IncrementScheme::Euler,
    };

    let additive = convergence_report(&config(ModelKind::Additive, vec![400], 4)).unwrap();
    let add_err = additive.rows[0].max_rel_err;

    let mult = convergence_report(&config(ModelKind::Multiplicative, vec![300], 1)).unwrap();
    let row = &mult.rows[0];
    let first_err = (row.moments[0] - 0.5f64.exp()).abs() / 0.5f64.exp();
    let log_mean = row.log_moments.as_ref().unwrap()[0];
    let log_se = row.log_std_err.as_ref().unwrap()[0];

    let sweep = convergence_report(&config(ModelKind::Additive, vec![50, 200, 800], 4)).unwrap();
    let sweep_errs: Vec<f64> = sweep.rows.iter().map(|r| r.max_rel_err).collect();
    let sweep_final = *sweep_errs.last().unwrap();
    let sweep_text: Vec<String> = sweep_errs.iter().map(|e| format!("{e:.3e}")).collect();

    let passed = add_err <= 0.02
        && first_err <= 0.03
        && log_mean.abs() <= 3.0 * log_se
        && sweep.monotone
        && sweep_final <= 0.02;
    (passed,
        format!(
            "additive N=400 max rel err {add_err:.3e} (tol 2e-2); multiplicative N=300 first moment rel err {first_err:.3e} (tol 3e-2), \
             log mean {log_mean:.3e} ± {log_se:.3e} (within 3 SE); additive sweep N=50,200,800 errors [{}] monotone={}; {:.1?}",
            sweep_text.join(", "),
            sweep.monotone,
            start.elapsed()
        ),
    )
}

fn simulate_json(args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_freebm"))
        .args(args)
        .output()
        .expect("run freebm");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

fn criterion_10_simulate_is_deterministic() -> Outcome {
    let runs: [&[&str]; 2] = [
        &["simulate", "additive", "--N", "30,60", "--trials", "6", "--seed", "11", "--format", "json"],
        &[
            "simulate", "multiplicative", "--N", "24", "--steps", "20", "--trials", "4", "--seed", "11", "--format",
            "json",
        ],
    ];
    let mut identical = true;
    let mut non_empty = true;
    for args in runs {
        let first = simulate_json(args);
        let second = simulate_json(args);
        identical &= first == second;
        non_empty &= !first.is_empty();
    }
    (identical && non_empty,
        format!("two models, two runs each with the same seed; byte-identical = {identical}"),
    )
}

const CRITERIA: [(&str, fn() -> Outcome); 10] = [
    ("criterion_01_closed_form_matches_ode_oracle", criterion_01_closed_form_matches_ode_oracle),
    ("criterion_02_stirling_identity", criterion_02_stirling_identity),
    ("criterion_03_pushforward_moments_match_laguerre", criterion_03_pushforward_moments_match_laguerre),
    ("criterion_04_fractional_routes_agree", criterion_04_fractional_routes_agree),
    ("criterion_05_degree_and_leading_coefficient", criterion_05_degree_and_leading_coefficient),
    ("criterion_06_auxiliary_identities", criterion_06_auxiliary_identities),
    ("criterion_07_grid_moments", criterion_07_grid_moments),
    ("criterion_08_support_endpoints", criterion_08_support_endpoints),
    ("criterion_09_random_matrix_convergence", criterion_09_random_matrix_convergence),
    ("criterion_10_simulate_is_deterministic", criterion_10_simulate_is_deterministic),
];

/// Whether criterion `number` named `name` is selected by the command line:
/// numbers pick criteria, other words match names, flags are ignored.
fn selected(args: &[String], number: usize, name: &str) -> bool {
    let filters: Vec<&String> = args.iter().filter(|a| !a.starts_with('-')).collect();
    filters.is_empty()
        || filters
            .iter()
            .any(|f| f.parse::<usize>().map_or_else(|_| name.contains(f.as_str()), |n| n == number))
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        for (name, _) in CRITERIA {
            println!("{name}: test");
        }
        return ExitCode::SUCCESS;
    }
    let mut failed = 0;
    for (i, (name, criterion)) in CRITERIA.iter().enumerate() {
        let number = i + 1;
        if !selected(&args, number, name) {
            continue;
        }
        let (passed, detail) = match std::panic::catch_unwind(criterion) {
            Ok(outcome) => outcome,
            Err(panic) => {
                let message = panic
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                (false, format!("panicked: {message}"))
            }
        };
        failed += usize::from(!passed);
        println!("criterion {number}: {} — {detail}", if passed { "PASS" } else { "FAIL" });
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
