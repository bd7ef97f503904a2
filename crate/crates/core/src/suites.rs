//! Self-check suites shared by the command-line `verify` command and the
//! acceptance tests. Each suite returns one [`Check`] per property.

use num_complex::Complex64;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::error::Result;
use crate::exactcomb::{
    alternating_binomial_sum_check, shared_table, stirling_via_log_series, verify_stirling_identity,
};
use crate::freeconv::{
    density_grid, exp_pushforward_density, nu_log_density, support_nu, support_nu_edge_equation,
    support_window, SupportInterval,
};
use crate::measure::{exact_moment, MeasureSpec};
use crate::moments::{
    exp_mgf_additive, fractional_moment_nu_series, m_n_polynomial, moments_ode_oracle,
    rational_from_f64, rational_to_f64,
    verify_theorem_main_moments, FRACTIONAL_AGREEMENT,
};
use crate::specfun::{
    euler_integral_1f1, kummer_1f1_real, kummer_transform_check, laguerre, KUMMER_CHECK_TOLERANCE,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl SuiteReport {
    fn new(suite: &str, checks: Vec<Check>) -> Self {
        let passed = checks.iter().all(|c| c.passed);
        SuiteReport {
            suite: suite.into(),
            checks,
            passed,
        }
    }
}

/// The Stirling identity for all `1 <= l <= l_max`, `1 <= m <= m_max`.
pub fn stirling_identity_check(l_max: usize, m_max: usize) -> Result<Check> {
    let mut failures = Vec::new();
    for l in 1..=l_max {
        for m in 1..=m_max {
            let check = verify_stirling_identity(l, m)?;
            if !check.holds {
                failures.push((l, m));
            }
        }
    }
    Ok(Check::new(
        "stirling identity",
        failures.is_empty(),
        format!("1 <= l <= {l_max}, 1 <= m <= {m_max}; failures: {failures:?}"),
    ))
}

/// Log-series extraction of `s(n,k)` against the recurrence table, `n <= n_max`.
pub fn log_series_check(n_max: usize) -> Result<Check> {
    let table = shared_table(n_max);
    let mut mismatches = 0;
    for n in 0..=n_max {
        for k in 0..=n {
            let from_series = stirling_via_log_series(n, k)?;
            if !from_series.is_integer() || from_series.to_integer() != *table.entry(n, k) {
                mismatches += 1;
            }
        }
    }
    Ok(Check::new(
        "log-series extraction",
        mismatches == 0,
        format!("n <= {n_max}; {mismatches} mismatches"),
    ))
}

pub fn alternating_sum_check(n_max: usize) -> Result<Check> {
    let mut failures = Vec::new();
    for big_n in 1..=n_max {
        for k in 0..=big_n {
            if !alternating_binomial_sum_check(big_n, k)? {
                failures.push((big_n, k));
            }
        }
    }
    Ok(Check::new(
        "alternating binomial sum",
        failures.is_empty(),
        format!("N <= {n_max}, k <= N; failures: {failures:?}"),
    ))
}

pub fn stirling_suite(l_max: usize, m_max: usize) -> Result<SuiteReport> {
    Ok(SuiteReport::new(
        "stirling",
        vec![
            stirling_identity_check(l_max, m_max)?,
            log_series_check(20)?,
            alternating_sum_check(30)?,
        ],
    ))
}

/// Kummer's transformation at `samples` random points with `|Re a|, |Im a| <= 3`,
/// `Re b` in `[0.5, 4]`, `|Im b| <= 2` and `|Re x|, |Im x| <= 5`.
pub fn kummer_transform_sample(samples: usize, seed: u64) -> Result<Check> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut failures = 0;
    for _ in 0..samples {
        let a = Complex64::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let b = Complex64::new(rng.random_range(0.5..4.0), rng.random_range(-2.0..2.0));
        let x = Complex64::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
        if !kummer_transform_check(a, b, x)? {
            failures += 1;
        }
    }
    Ok(Check::new(
        "kummer transformation",
        failures == 0,
        format!("{samples} points, seed {seed}, tolerance {KUMMER_CHECK_TOLERANCE:e}; {failures} failures"),
    ))
}

/// Euler's integral against the series for `(a,b)` in `{(1,2),(2,3),(1,3),(2,5)}`
/// and 21 equally spaced `x` in `[-5, 5]`.
pub fn euler_integral_check() -> Result<Check> {
    let mut worst = 0.0f64;
    for (a, b) in [(1.0, 2.0), (2.0, 3.0), (1.0, 3.0), (2.0, 5.0)] {
        for i in 0..=20 {
            let x = -5.0 + 0.5 * i as f64;
            let integral = euler_integral_1f1(a, b, x)?;
            let series = kummer_1f1_real(a, b, x)?;
            worst = worst.max((integral - series).abs() / series.abs());
        }
    }
    Ok(Check::new(
        "euler integral",
        worst <= 1e-10,
        format!("max relative deviation {worst:e} (tolerance 1e-10)"),
    ))
}

/// `L_n^{(1)}(x) = (n+1) 1F1(-n; 2; x)` for `n <= 15` on `x` in `[-10, 0]`, the
/// half-line where the moment formula evaluates them.
pub fn laguerre_link_check() -> Result<Check> {
    let mut worst = 0.0f64;
    for n in 0..=15 {
        for i in 0..=20 {
            let x = -0.5 * i as f64;
            let lhs = laguerre(n, 1.0, x);
            let rhs = (n as f64 + 1.0) * kummer_1f1_real(-(n as f64), 2.0, x)?;
            worst = worst.max((lhs - rhs).abs() / rhs.abs().max(1.0));
        }
    }
    Ok(Check::new(
        "laguerre link",
        worst <= 1e-12,
        format!("max relative deviation {worst:e} (tolerance 1e-12)"),
    ))
}

/// Seed of the random samples in [`kummer_suite`] and [`fractional_suite`].
pub const DEFAULT_SUITE_SEED: u64 = 2024;

pub fn kummer_suite(seed: u64) -> Result<SuiteReport> {
    Ok(SuiteReport::new(
        "kummer",
        vec![
            kummer_transform_sample(50, seed)?,
            euler_integral_check()?,
            laguerre_link_check()?,
        ],
    ))
}

pub fn theorem_main_suite(n_max: usize, ts: &[f64]) -> Result<SuiteReport> {
    let checks = ts
        .iter()
        .map(|&t| {
            let report = verify_theorem_main_moments(n_max, t)?;
            Ok(Check::new(
                format!("pushforward moments at t = {t}"),
                report.all_pass,
                format!(
                    "n <= {n_max}; max relative deviation {:e} (tolerance {:e})",
                    report.max_rel_deviation, report.tolerance
                ),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SuiteReport::new("theorem-main", checks))
}

/// Closed form against the ODE oracle, and degree and leading coefficient.
pub fn moment_polynomial_suite(n_max: usize) -> SuiteReport {
    let oracle = moments_ode_oracle(n_max);
    let closed: Vec<_> = (0..=n_max).map(m_n_polynomial).collect();
    let mismatches: Vec<usize> = (0..=n_max).filter(|&n| closed[n] != oracle[n]).collect();
    let bad_leading: Vec<usize> = (0..=n_max)
        .filter(|&n| {
            let sign = if n % 2 == 0 { 1 } else { -1 };
            let expected = num_rational::BigRational::new(sign.into(), (n as i64 + 1).into());
            closed[n].degree() != Some(n) || closed[n].leading_coefficient() != Some(&expected)
        })
        .collect();
    let bad_low: Vec<usize> = (0..=n_max)
        .filter(|&n| (0..n.div_ceil(2)).any(|k| !closed[n].coeff(k).is_zero()))
        .collect();
    SuiteReport::new(
        "moments",
        vec![
            Check::new(
                "closed form equals ODE oracle",
                mismatches.is_empty(),
                format!("n <= {n_max}; mismatches: {mismatches:?}"),
            ),
            Check::new(
                "degree n, leading coefficient (-1)^n/(1+n)",
                bad_leading.is_empty(),
                format!("n <= {n_max}; failures: {bad_leading:?}"),
            ),
            Check::new(
                "coefficients below ceil(n/2) vanish",
                bad_low.is_empty(),
                format!("n <= {n_max}; failures: {bad_low:?}"),
            ),
        ],
    )
}

/// Largest relative gap between the `1F1` and binomial-series forms of the
/// fractional moment over `samples` random `alpha` with `|alpha| <= 5`.
pub fn fractional_agreement(samples: usize, t: f64, seed: u64) -> Result<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut drawn = 0;
    while drawn < samples {
        let alpha = Complex64::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
        if alpha.norm() > 5.0 || alpha.norm() == 0.0 {
            continue;
        }
        drawn += 1;
        let via_1f1 = (alpha * t / 2.0).exp() * exp_mgf_additive(alpha, t)?;
        let via_series = fractional_moment_nu_series(alpha, t)?;
        worst = worst.max((via_1f1 - via_series).norm() / via_1f1.norm());
    }
    Ok(worst)
}

pub fn fractional_suite(samples: usize, ts: &[f64], seed: u64) -> Result<SuiteReport> {
    let checks = ts
        .iter()
        .map(|&t| {
            let worst = fractional_agreement(samples, t, seed)?;
            Ok(Check::new(
                format!("fractional moments at t = {t}"),
                worst <= FRACTIONAL_AGREEMENT,
                format!("{samples} alphas; max relative gap {worst:e} (tolerance {FRACTIONAL_AGREEMENT:e})"),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SuiteReport::new("fractional", checks))
}

/// Defaults of the density checks.
pub const DENSITY_ETA: f64 = 1e-3;
pub const DENSITY_POINTS: usize = 4000;
/// Height and threshold used to locate support edges; a small height keeps the
/// Cauchy tails of the smoothed density below the threshold.
pub const EDGE_ETA: f64 = 1e-6;
pub const EDGE_THRESHOLD: f64 = 1e-4;

/// Largest relative gap between trapezoidal grid moments of `sc(2 sqrt t) ⊞ Unif[-t, 0]`
/// and the exact ones, orders `0..=n_max`.
pub fn grid_moment_deviation(t: f64, n_max: usize, points: usize, eta: f64) -> Result<f64> {
    let radius = 2.0 * t.sqrt();
    let (lo, hi) = support_window(radius, -t, 0.0, 3.0 * eta);
    let grid = density_grid(radius, -t, 0.0, lo, hi, points, eta)?;
    let spec = MeasureSpec::standard_family(rational_from_f64(t)?);
    let mut worst = 0.0f64;
    for n in 0..=n_max {
        let exact = rational_to_f64(&exact_moment(&spec, n)?);
        worst = worst.max((grid.moment(n) - exact).abs() / exact.abs());
    }
    Ok(worst)
}

/// Largest relative gap between the endpoints of two intervals.
pub fn endpoint_gap(found: &SupportInterval, reference: &SupportInterval) -> f64 {
    let lower = (found.lower - reference.lower).abs() / reference.lower.abs();
    let upper = (found.upper - reference.upper).abs() / reference.upper.abs();
    lower.max(upper)
}

/// Threshold crossings of the exp-pushforward density of `nu_t`.
pub fn detect_nu_support(t: f64, points: usize, eta: f64, threshold: f64) -> Result<SupportInterval> {
    let pushed = exp_pushforward_density(&nu_log_density(t, points, eta)?);
    pushed.support_above(threshold).ok_or_else(|| {
        crate::error::Error::Inconsistent(format!("density never exceeds {threshold}"))
    })
}

pub fn density_suite() -> Result<SuiteReport> {
    let mut checks = Vec::new();
    for t in [0.25, 1.0, 4.0] {
        let worst = grid_moment_deviation(t, 8, DENSITY_POINTS, DENSITY_ETA)?;
        checks.push(Check::new(
            format!("grid moments at t = {t}"),
            worst <= 1e-3,
            format!("n <= 8, eta {DENSITY_ETA:e}, {DENSITY_POINTS} points; max relative gap {worst:e} (tolerance 1e-3)"),
        ));
    }
    let found = detect_nu_support(2.0, DENSITY_POINTS, EDGE_ETA, EDGE_THRESHOLD)?;
    for (label, reference) in [
        ("closed form", support_nu(2.0)?),
        ("edge equation", support_nu_edge_equation(2.0)?),
    ] {
        let gap = endpoint_gap(&found, &reference);
        checks.push(Check::new(
            format!("support edges at t = 2 vs {label}"),
            gap <= 1e-2,
            format!(
                "detected [{}, {}], {label} [{}, {}]; max relative gap {gap:e} (tolerance 1e-2)",
                found.lower, found.upper, reference.lower, reference.upper
            ),
        ));
    }
    Ok(SuiteReport::new("density", checks))
}

/// Every suite: Stirling identities up to `(l_max, m_max)`, the pushforward
/// moments up to `n_max` at each `t`, and the fixed-size remainder.
pub fn all_suites(
    l_max: usize,
    m_max: usize,
    n_max: usize,
    ts: &[f64],
    seed: u64,
) -> Result<Vec<SuiteReport>> {
    Ok(vec![
        stirling_suite(l_max, m_max)?,
        kummer_suite(seed)?,
        theorem_main_suite(n_max, ts)?,
        moment_polynomial_suite(30),
        fractional_suite(40, &[0.5, 2.0], seed)?,
        density_suite()?,
    ])
}
