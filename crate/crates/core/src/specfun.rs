//! Laguerre polynomials, Kummer's confluent hypergeometric function `1F1`,
//! and the numerical identities around it (Euler integral, Kummer
//! transformation, beta integral).

use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::exactcomb::factorial;
use crate::quadrature::{integrate, QuadratureOptions};

/// Truncation contract for infinite hypergeometric series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPolicy {
    pub relative_tolerance: f64,
    pub max_terms: usize,
}

impl Default for SeriesPolicy {
    fn default() -> Self {
        SeriesPolicy {
            relative_tolerance: 1e-15,
            max_terms: 10_000,
        }
    }
}

impl SeriesPolicy {
    pub fn new(relative_tolerance: f64, max_terms: usize) -> Result<Self> {
        let policy = SeriesPolicy {
            relative_tolerance,
            max_terms,
        };
        policy.validate()?;
        Ok(policy)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.relative_tolerance > 0.0 && self.relative_tolerance < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "relative tolerance must lie in (0, 1), got {}",
                self.relative_tolerance
            )));
        }
        if self.max_terms == 0 {
            return Err(Error::InvalidArgument("max_terms must be >= 1".into()));
        }
        Ok(())
    }
}

/// Real generalized binomial `y (y-1) ... (y-k+1) / k!`.
fn real_binomial(y: f64, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (y - i as f64) / (i as f64 + 1.0))
}

/// `L_n^{(alpha)}(x) = sum_{j=0}^{n} C(n+alpha, n-j) (-x)^j / j!`.
pub fn laguerre(n: usize, alpha: f64, x: f64) -> f64 {
    let mut sum = 0.0;
    let mut power = 1.0; // (-x)^j / j!
    for j in 0..=n {
        sum += real_binomial(n as f64 + alpha, n - j) * power;
        power *= -x / (j as f64 + 1.0);
    }
    sum
}

/// Returns `Some(N)` when `a = -N` for a natural `N`.
fn nonpositive_integer(a: Complex64) -> Option<usize> {
    if a.im == 0.0 && a.re <= 0.0 && a.re.fract() == 0.0 && a.re > -1e15 {
        Some((-a.re) as usize)
    } else {
        None
    }
}

fn is_pole(b: Complex64, j: usize) -> bool {
    b + j as f64 == Complex64::new(0.0, 0.0)
}

/// Power series of `1F1(a;b;x)` without any argument transformation.
///
/// A non-positive integer `a = -N` sums the exact degree-`N` polynomial.
/// Otherwise terms are added until two consecutive terms fall below
/// `relative_tolerance * |sum|`. Sums whose terms dwarf the result are redone
/// in exact arithmetic, see [`CANCELLATION_LIMIT`].
pub fn kummer_1f1_direct(
    a: Complex64,
    b: Complex64,
    x: Complex64,
    policy: &SeriesPolicy,
) -> Result<Complex64> {
    policy.validate()?;
    let one = Complex64::new(1.0, 0.0);
    let ratio = |j: usize| (a + j as f64) / ((b + j as f64) * (j as f64 + 1.0)) * x;
    let degree = nonpositive_integer(a);
    let (sum, peak) = match degree {
        Some(degree) => {
            if (0..degree).any(|j| is_pole(b, j)) {
                return Err(Error::Pole { b });
            }
            let mut term = one;
            let mut sum = one;
            let mut peak = 1.0f64;
            for j in 0..degree {
                term *= ratio(j);
                sum += term;
                peak = peak.max(term.norm());
            }
            (sum, peak)
        }
        None if nonpositive_integer(b).is_some() => return Err(Error::Pole { b }),
        None => ratio_series(one, ratio, policy)?,
    };
    if peak <= CANCELLATION_LIMIT * sum.norm() {
        return Ok(sum);
    }
    let (ea, eb, ex) = (exact(a)?, exact(b)?, exact(x)?);
    let exact_one = BigRational::one();
    let exact_ratio = |j: usize| {
        let j = rational_index(j);
        (&ea + &j) * &ex / ((&eb + &j) * (j + &exact_one))
    };
    let first = Complex::new(BigRational::one(), BigRational::zero());
    match degree {
        Some(degree) => {
            let mut term = first.clone();
            let mut sum = first;
            for j in 0..degree {
                term = term * exact_ratio(j);
                sum = sum + &term;
            }
            Ok(rounded(&sum))
        }
        None => exact_ratio_series(first, exact_ratio, policy),
    }
}

/// Largest term-to-sum ratio tolerated in floating point; beyond it a series
/// is summed again in exact rational arithmetic. Below it the rounding error
/// stays under ~1e-14 relative.
pub const CANCELLATION_LIMIT: f64 = 16.0;

/// Sums `T_0 + T_1 + ...` with `T_{j+1} = T_j ratio(j)` until two consecutive
/// terms fall below the tolerance; returns the sum and the largest `|T_j|`.
pub(crate) fn ratio_series(
    first: Complex64,
    ratio: impl Fn(usize) -> Complex64,
    policy: &SeriesPolicy,
) -> Result<(Complex64, f64)> {
    let mut term = first;
    let mut sum = first;
    let mut peak = first.norm();
    let mut small_in_a_row = 0;
    for j in 0..policy.max_terms {
        term *= ratio(j);
        sum += term;
        if !sum.re.is_finite() || !sum.im.is_finite() {
            return Err(Error::SeriesNonConvergence { terms: j + 1 });
        }
        peak = peak.max(term.norm());
        if term.norm() <= policy.relative_tolerance * sum.norm() {
            small_in_a_row += 1;
            if small_in_a_row == 2 {
                return Ok((sum, peak));
            }
        } else {
            small_in_a_row = 0;
        }
    }
    Err(Error::SeriesNonConvergence {
        terms: policy.max_terms,
    })
}

/// Same recurrence over exact complex rationals. Only the final conversion
/// rounds, so alternating series with huge intermediate terms stay accurate.
pub(crate) fn exact_ratio_series(
    first: Complex<BigRational>,
    ratio: impl Fn(usize) -> Complex<BigRational>,
    policy: &SeriesPolicy,
) -> Result<Complex64> {
    let mut term = first.clone();
    let mut sum = first;
    let mut small_in_a_row = 0;
    for j in 0..policy.max_terms {
        term = term * ratio(j);
        sum = sum + &term;
        if rounded(&term).norm() <= policy.relative_tolerance * rounded(&sum).norm() {
            small_in_a_row += 1;
            if small_in_a_row == 2 {
                return Ok(rounded(&sum));
            }
        } else {
            small_in_a_row = 0;
        }
    }
    Err(Error::SeriesNonConvergence {
        terms: policy.max_terms,
    })
}

/// The exact binary value of a finite complex double.
pub(crate) fn exact(z: Complex64) -> Result<Complex<BigRational>> {
    match (BigRational::from_float(z.re), BigRational::from_float(z.im)) {
        (Some(re), Some(im)) => Ok(Complex::new(re, im)),
        _ => Err(Error::InvalidArgument(format!("non-finite series argument {z}"))),
    }
}

pub(crate) fn rational_index(j: usize) -> BigRational {
    BigRational::from_integer(j.into())
}

pub(crate) fn rounded(z: &Complex<BigRational>) -> Complex64 {
    Complex64::new(z.re.to_f64().unwrap_or(f64::NAN), z.im.to_f64().unwrap_or(f64::NAN))
}

/// Kummer's confluent hypergeometric function `1F1(a;b;x)`.
///
/// For `Re x < -1` and non-polynomial `a` the series is summed after the
/// Kummer transformation `1F1(a;b;x) = e^x 1F1(b-a;b;-x)`, whose terms do not
/// alternate.
pub fn kummer_1f1(
    a: Complex64,
    b: Complex64,
    x: Complex64,
    policy: &SeriesPolicy,
) -> Result<Complex64> {
    if nonpositive_integer(a).is_none() && x.re < -1.0 {
        if nonpositive_integer(b).is_some() {
            return Err(Error::Pole { b });
        }
        let inner = kummer_1f1_direct(b - a, b, -x, policy)?;
        return Ok(x.exp() * inner);
    }
    kummer_1f1_direct(a, b, x, policy)
}

/// Real-argument convenience wrapper with the default policy.
pub fn kummer_1f1_real(a: f64, b: f64, x: f64) -> Result<f64> {
    let v = kummer_1f1(
        Complex64::new(a, 0.0),
        Complex64::new(b, 0.0),
        Complex64::new(x, 0.0),
        &SeriesPolicy::default(),
    )?;
    Ok(v.re)
}

fn positive_integer(v: f64) -> Option<usize> {
    (v > 0.0 && v.fract() == 0.0 && v < 171.0).then_some(v as usize)
}

fn factorial_f64(n: usize) -> f64 {
    factorial(n).to_f64().unwrap_or(f64::INFINITY)
}

/// `1F1(a;b;x)` from Euler's integral
/// `Gamma(b)/(Gamma(a) Gamma(b-a)) int_0^1 t^{a-1} (1-t)^{b-a-1} e^{tx} dt`.
///
/// Integer `a` and `b` use exact factorials for the Gamma prefactor; other
/// parameters normalize by the numerically integrated beta function.
pub fn euler_integral_1f1(a: f64, b: f64, x: f64) -> Result<f64> {
    if !(a > 0.0 && b - a > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "Euler integral needs a > 0 and b > a, got a = {a}, b = {b}"
        )));
    }
    let opts = QuadratureOptions::default();
    let weight = move |t: f64| t.powf(a - 1.0) * (1.0 - t).powf(b - a - 1.0);
    let integral = integrate(|t| weight(t) * (t * x).exp(), 0.0, 1.0, &opts)?;
    let beta = match (positive_integer(a), positive_integer(b)) {
        (Some(ia), Some(ib)) => {
            factorial_f64(ia - 1) * factorial_f64(ib - ia - 1) / factorial_f64(ib - 1)
        }
        _ => integrate(weight, 0.0, 1.0, &opts)?,
    };
    Ok(integral / beta)
}

/// Tolerance of [`kummer_transform_check`].
pub const KUMMER_CHECK_TOLERANCE: f64 = 1e-10;

/// Checks `1F1(a;b;x) = e^x 1F1(b-a;b;-x)` with both sides summed directly.
pub fn kummer_transform_check(a: Complex64, b: Complex64, x: Complex64) -> Result<bool> {
    let policy = SeriesPolicy::default();
    let lhs = kummer_1f1_direct(a, b, x, &policy)?;
    let rhs = x.exp() * kummer_1f1_direct(b - a, b, -x, &policy)?;
    Ok((lhs - rhs).norm() <= KUMMER_CHECK_TOLERANCE * (1.0 + lhs.norm()))
}

/// `int_0^1 t^n (1-t)^k dt = n! k! / (n+k+1)!`.
///
/// This is the standard beta value `1/((n+k+1) C(n+k,n))`.
pub fn beta_integral_exact(n: usize, k: usize) -> BigRational {
    BigRational::new(factorial(n) * factorial(k), factorial(n + k + 1))
}

/// `int_0^1 t^n (1-t)^k dt` as a float, via [`beta_integral_exact`].
pub fn beta_integral(n: usize, k: usize) -> f64 {
    beta_integral_exact(n, k).to_f64().unwrap_or(f64::NAN)
}
