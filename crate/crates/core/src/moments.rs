//! Moment engines for `mu_t = sc(2 sqrt t) ⊞ Unif[-t,0]`, general
//! semicircle-uniform free convolutions, and the law `nu_t` of the free
//! positive multiplicative Brownian motion.
//!
//! Two independent derivations of `m_n(t) = int x^n d mu_t` live here: the
//! closed Stirling form [`m_n_polynomial`] and the coefficient recursion of the
//! moment ODE [`moments_ode_oracle`], which never touches Stirling numbers.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exactcomb::{factorial, shared_table};
use crate::polynomial::RationalPolynomial;
use crate::specfun::{
    exact, exact_ratio_series, kummer_1f1, laguerre, ratio_series, rational_index, SeriesPolicy,
    CANCELLATION_LIMIT,
};

/// Relative agreement required between the `1F1` and binomial-series forms
/// of the fractional moments of `nu_t`.
pub const FRACTIONAL_AGREEMENT: f64 = 1e-10;

/// Tolerance of the moment-level exp-pushforward check, relative to `1 + |value|`.
pub const THEOREM_MAIN_TOLERANCE: f64 = 1e-10;

fn ratio(p: BigInt, q: BigInt) -> BigRational {
    BigRational::new(p, q)
}

/// `m_n(t) = n! sum_{j=ceil(n/2)}^{n} t^j s(1+j, n+1-j) / (j! (1+j)!)`.
pub fn m_n_polynomial(n: usize) -> RationalPolynomial {
    let table = shared_table(n + 1);
    let n_fact = factorial(n);
    let mut coeffs = vec![BigRational::zero(); n + 1];
    for (j, slot) in coeffs.iter_mut().enumerate().skip(n.div_ceil(2)) {
        let s = table.entry(1 + j, n + 1 - j);
        *slot = ratio(&n_fact * s, factorial(j) * factorial(j + 1));
    }
    RationalPolynomial::new(coeffs)
}

/// Builds `c(n,k) = [t^k] m_n(t)` for `n <= n_max` from the moment ODE:
/// `c(0,0) = 1`, `c(n,0) = 0`, `c(n,n) = (-1)^n/(1+n)` and
/// `(n-k) c(n,k) = (n/2) sum_{l=0}^{k-1} sum_{j=1}^{n-k} c(j+l-1,l) c(n-l-j-1,k-1-l)`.
pub fn moments_ode_oracle(n_max: usize) -> Vec<RationalPolynomial> {
    let mut c: Vec<Vec<BigRational>> = Vec::with_capacity(n_max + 1);
    c.push(vec![BigRational::one()]);
    for n in 1..=n_max {
        let mut row = vec![BigRational::zero(); n + 1];
        let sign = if n % 2 == 0 { 1 } else { -1 };
        row[n] = ratio(BigInt::from(sign), BigInt::from(n + 1));
        for k in 1..n {
            let mut sum = BigRational::zero();
            for l in 0..k {
                for j in 1..=(n - k) {
                    let a = &c[j + l - 1][l];
                    let b = &c[n - l - j - 1][k - 1 - l];
                    if !a.is_zero() && !b.is_zero() {
                        sum += a * b;
                    }
                }
            }
            row[k] = sum * ratio(BigInt::from(n), BigInt::from(2 * (n - k)));
        }
        c.push(row);
    }
    c.into_iter().map(RationalPolynomial::new).collect()
}

/// `int x^n d(sc(2 sqrt a) ⊞ Unif[b,c])`, exactly.
///
/// `n! sum_k c^{n-k}/(n-k)! sum_{j=ceil(k/2)}^{k} (c-b)^{2j-k} a^{k-j} s(1+j,k+1-j) / (j!(1+j)!)`
/// with `0^0 = 1`, so `b = c` yields the moments of `sc(2 sqrt a) ⊞ delta_c`.
pub fn moments_sc_unif_general(
    n: usize,
    a: &BigRational,
    b: &BigRational,
    c: &BigRational,
) -> Result<BigRational> {
    if !a.is_positive() {
        return Err(Error::InvalidArgument(format!(
            "semicircle variance must be positive, got {a}"
        )));
    }
    if b > c {
        return Err(Error::InvalidArgument(format!(
            "uniform interval needs b <= c, got [{b}, {c}]"
        )));
    }
    let table = shared_table(n + 1);
    let width = c - b;
    let mut total = BigRational::zero();
    for k in 0..=n {
        let mut inner = BigRational::zero();
        for j in k.div_ceil(2)..=k {
            let s = table.entry(1 + j, k + 1 - j);
            if s.is_zero() {
                continue;
            }
            let weight = num_traits::pow(width.clone(), 2 * j - k) * num_traits::pow(a.clone(), k - j);
            inner += weight * ratio(s.clone(), factorial(j) * factorial(j + 1));
        }
        let shift = num_traits::pow(c.clone(), n - k) / BigRational::from_integer(factorial(n - k));
        total += shift * inner;
    }
    Ok(total * BigRational::from_integer(factorial(n)))
}

/// `int x^n d nu_t = e^{nt/2} L_{n-1}^{(1)}(-nt) / n`.
pub fn moments_nu_laguerre(n: usize, t: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("order must be >= 1".into()));
    }
    check_time(t)?;
    let nf = n as f64;
    Ok((nf * t / 2.0).exp() * laguerre(n - 1, 1.0, -nf * t) / nf)
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("t must be positive, got {t}")))
    }
}

/// `int e^{alpha x} d mu_t = 1F1(1-alpha; 2; -alpha t)`.
pub fn exp_mgf_additive(alpha: Complex64, t: f64) -> Result<Complex64> {
    check_time(t)?;
    if alpha == Complex64::new(0.0, 0.0) {
        return Ok(Complex64::new(1.0, 0.0));
    }
    kummer_1f1(
        Complex64::new(1.0, 0.0) - alpha,
        Complex64::new(2.0, 0.0),
        -alpha * t,
        &SeriesPolicy::default(),
    )
}

/// Partial sum `sum_{k <= order} alpha^k m_k(t) / k!` from the exact moment
/// polynomials, with the magnitude of the last term as a remainder estimate.
pub fn exp_mgf_moment_series(alpha: Complex64, t: f64, order: usize) -> Result<(Complex64, f64)> {
    check_time(t)?;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut power = Complex64::new(1.0, 0.0); // alpha^k / k!
    let mut last = 0.0;
    for k in 0..=order {
        let term = power * m_n_polynomial(k).evaluate_f64(t);
        sum += term;
        last = term.norm();
        power *= alpha / (k as f64 + 1.0);
    }
    Ok((sum, last))
}

/// `e^{alpha t/2} (1/alpha) sum_j C(alpha, 1+j) (alpha t)^j / j!`.
pub fn fractional_moment_nu_series(alpha: Complex64, t: f64) -> Result<Complex64> {
    check_time(t)?;
    if alpha == Complex64::new(0.0, 0.0) {
        return Err(Error::InvalidArgument("alpha must be nonzero".into()));
    }
    let policy = SeriesPolicy::default();
    let x = alpha * t;
    // C(alpha, j+2)/C(alpha, j+1) = (alpha-j-1)/(j+2)
    let ratio = |j: usize| (alpha - (j as f64 + 1.0)) / (j as f64 + 2.0) * x / (j as f64 + 1.0);
    let (mut sum, peak) = ratio_series(alpha, ratio, &policy)?;
    if peak > CANCELLATION_LIMIT * sum.norm() {
        let (a, x) = (exact(alpha)?, exact(x)?);
        let one = BigRational::one();
        sum = exact_ratio_series(a.clone(), |j| {
            let j = rational_index(j);
            (&a - (&j + &one)) * &x / ((&j + &one + &one) * (j + &one))
        }, &policy)?;
    }
    Ok((alpha * t / 2.0).exp() * sum / alpha)
}

/// `int x^alpha d nu_t = e^{alpha t/2} 1F1(1-alpha; 2; -alpha t)`, cross-checked
/// against [`fractional_moment_nu_series`].
pub fn fractional_moment_nu(alpha: Complex64, t: f64) -> Result<Complex64> {
    if alpha == Complex64::new(0.0, 0.0) {
        return Err(Error::InvalidArgument("alpha must be nonzero".into()));
    }
    let via_1f1 = (alpha * t / 2.0).exp() * exp_mgf_additive(alpha, t)?;
    let via_series = fractional_moment_nu_series(alpha, t)?;
    let scale = via_1f1.norm().max(via_series.norm());
    if (via_1f1 - via_series).norm() > FRACTIONAL_AGREEMENT * scale {
        return Err(Error::Inconsistent(format!(
            "fractional moment at alpha = {alpha}, t = {t}: 1F1 gives {via_1f1}, series gives {via_series}"
        )));
    }
    Ok(via_1f1)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremMainRow {
    pub n: usize,
    /// `e^{nt/2} 1F1(1-n; 2; -nt)`
    pub pushforward: f64,
    /// `e^{nt/2} L_{n-1}^{(1)}(-nt) / n`
    pub laguerre: f64,
    pub rel_deviation: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremMainReport {
    pub t: f64,
    pub n_max: usize,
    pub tolerance: f64,
    pub rows: Vec<TheoremMainRow>,
    pub max_rel_deviation: f64,
    pub all_pass: bool,
}

/// Moment-level check that `exp(sc(2 sqrt t) ⊞ Unif[-t/2,t/2])` has the
/// moments of `nu_t`, for orders `1..=n_max`.
pub fn verify_theorem_main_moments(n_max: usize, t: f64) -> Result<TheoremMainReport> {
    check_time(t)?;
    let mut rows = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let nf = n as f64;
        let pushforward =
            (nf * t / 2.0).exp() * exp_mgf_additive(Complex64::new(nf, 0.0), t)?.re;
        let lag = moments_nu_laguerre(n, t)?;
        let diff = (pushforward - lag).abs();
        rows.push(TheoremMainRow {
            n,
            pushforward,
            laguerre: lag,
            rel_deviation: diff / lag.abs(),
            pass: diff <= THEOREM_MAIN_TOLERANCE * (1.0 + lag.abs()),
        });
    }
    let max_rel_deviation = rows.iter().map(|r| r.rel_deviation).fold(0.0, f64::max);
    let all_pass = rows.iter().all(|r| r.pass);
    Ok(TheoremMainReport {
        t,
        n_max,
        tolerance: THEOREM_MAIN_TOLERANCE,
        rows,
        max_rel_deviation,
        all_pass,
    })
}

/// Converts an exact rational to the nearest float.
pub fn rational_to_f64(v: &BigRational) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

/// Exact rational with the same value as a finite float.
pub fn rational_from_f64(v: f64) -> Result<BigRational> {
    BigRational::from_float(v)
        .ok_or_else(|| Error::InvalidArgument(format!("non-finite value {v}")))
}
