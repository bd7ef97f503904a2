//! Symbolic description of the compactly supported laws handled here, and
//! moment queries against them.

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::moments::{
    exp_mgf_additive, fractional_moment_nu, moments_nu_laguerre, moments_sc_unif_general,
    rational_to_f64,
};
use crate::specfun::SeriesPolicy;

#[derive(Debug, Clone, PartialEq)]
pub enum MeasureSpec {
    /// Semicircle law of radius `2 sqrt(variance)`.
    Semicircle { variance: BigRational },
    Uniform { b: BigRational, c: BigRational },
    Dirac { c: BigRational },
    BoxPlus(Vec<MeasureSpec>),
    /// Image under `x -> factor * x`.
    Scaled {
        factor: BigRational,
        inner: Box<MeasureSpec>,
    },
    /// Image under `x -> e^x`.
    ExpPushforward(Box<MeasureSpec>),
    /// Spectral law of the free positive multiplicative Brownian motion.
    Nu { t: f64 },
}

impl MeasureSpec {
    /// Semicircle with the given radius `R`, i.e. variance `R^2/4`.
    pub fn semicircle(radius: BigRational) -> Self {
        let variance = &radius * &radius / BigRational::from_integer(4.into());
        MeasureSpec::Semicircle { variance }
    }

    pub fn semicircle_variance(variance: BigRational) -> Self {
        MeasureSpec::Semicircle { variance }
    }

    pub fn uniform(b: BigRational, c: BigRational) -> Self {
        MeasureSpec::Uniform { b, c }
    }

    pub fn dirac(c: BigRational) -> Self {
        MeasureSpec::Dirac { c }
    }

    pub fn boxplus(parts: Vec<MeasureSpec>) -> Self {
        MeasureSpec::BoxPlus(parts)
    }

    pub fn scaled(factor: BigRational, inner: MeasureSpec) -> Self {
        MeasureSpec::Scaled {
            factor,
            inner: Box::new(inner),
        }
    }

    pub fn exp_pushforward(inner: MeasureSpec) -> Self {
        MeasureSpec::ExpPushforward(Box::new(inner))
    }

    /// `sc(2 sqrt t) ⊞ Unif[-t, 0]`.
    pub fn standard_family(t: BigRational) -> Self {
        let zero = BigRational::zero();
        MeasureSpec::boxplus(vec![
            MeasureSpec::semicircle_variance(t.clone()),
            MeasureSpec::uniform(-t, zero),
        ])
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MeasureSpec::Semicircle { variance } if !variance.is_positive() => Err(
                Error::InvalidArgument(format!("semicircle variance must be positive, got {variance}")),
            ),
            MeasureSpec::Uniform { b, c } if b > c => Err(Error::InvalidArgument(format!(
                "uniform interval needs b <= c, got [{b}, {c}]"
            ))),
            MeasureSpec::BoxPlus(parts) if parts.is_empty() => {
                Err(Error::InvalidArgument("empty free convolution".into()))
            }
            MeasureSpec::BoxPlus(parts) => parts.iter().try_for_each(MeasureSpec::validate),
            MeasureSpec::Scaled { factor, .. } if factor.is_zero() => {
                Err(Error::InvalidArgument("scaling factor must be nonzero".into()))
            }
            MeasureSpec::Scaled { inner, .. } | MeasureSpec::ExpPushforward(inner) => {
                inner.validate()
            }
            MeasureSpec::Nu { t } if !(*t > 0.0 && t.is_finite()) => {
                Err(Error::InvalidArgument(format!("nu_t needs t > 0, got {t}")))
            }
            _ => Ok(()),
        }
    }
}

/// `sc(2 sqrt variance) ⊞ uniform ⊞ delta_shift`, the normal form of every
/// additive measure handled here.
#[derive(Debug, Clone, PartialEq)]
pub struct AdditiveParams {
    pub variance: BigRational,
    pub uniform: Option<(BigRational, BigRational)>,
    pub shift: BigRational,
}

impl AdditiveParams {
    fn dirac(c: BigRational) -> Self {
        AdditiveParams {
            variance: BigRational::zero(),
            uniform: None,
            shift: c,
        }
    }

    fn combine(mut self, other: AdditiveParams) -> Result<Self> {
        self.variance += other.variance;
        self.shift += other.shift;
        self.uniform = match (self.uniform, other.uniform) {
            (Some(_), Some(_)) => {
                return Err(Error::UnsupportedMeasure(
                    "free convolution of two uniform laws".into(),
                ))
            }
            (u, None) | (None, u) => u,
        };
        Ok(self)
    }

    fn scale(self, factor: &BigRational) -> Self {
        let uniform = self.uniform.map(|(b, c)| {
            let (lo, hi) = (&b * factor, &c * factor);
            if factor.is_negative() {
                (hi, lo)
            } else {
                (lo, hi)
            }
        });
        AdditiveParams {
            variance: self.variance * factor * factor,
            uniform,
            shift: self.shift * factor,
        }
    }

    /// Uniform interval after absorbing the point-mass shift; degenerate
    /// intervals fold back into the shift.
    fn interval(&self) -> Option<(BigRational, BigRational)> {
        match &self.uniform {
            Some((b, c)) if b < c => Some((b + &self.shift, c + &self.shift)),
            _ => None,
        }
    }

    fn total_shift(&self) -> BigRational {
        match &self.uniform {
            Some((b, c)) if b == c => &self.shift + b,
            _ => self.shift.clone(),
        }
    }

    /// Exact `n`-th moment.
    pub fn moment(&self, n: usize) -> Result<BigRational> {
        let has_semicircle = self.variance.is_positive();
        match (has_semicircle, self.interval()) {
            (true, Some((b, c))) => moments_sc_unif_general(n, &self.variance, &b, &c),
            (true, None) => {
                let d = self.total_shift();
                moments_sc_unif_general(n, &self.variance, &d, &d)
            }
            (false, Some((b, c))) => {
                let np1 = BigRational::from_integer((n + 1).into());
                let num = num_traits::pow(c.clone(), n + 1) - num_traits::pow(b.clone(), n + 1);
                Ok(num / (np1 * (c - b)))
            }
            (false, None) => Ok(num_traits::pow(self.total_shift(), n)),
        }
    }

    /// `int e^{alpha x} d mu`.
    pub fn exp_moment(&self, alpha: Complex64) -> Result<Complex64> {
        let has_semicircle = self.variance.is_positive();
        let zero = Complex64::new(0.0, 0.0);
        if alpha == zero {
            return Ok(Complex64::new(1.0, 0.0));
        }
        match (has_semicircle, self.interval()) {
            (true, Some((b, c))) => {
                // D_{a/(c-b)}(mu_s) * delta_c with s = (c-b)^2/a
                let a = rational_to_f64(&self.variance);
                let width = rational_to_f64(&(&c - &b));
                let s = rational_to_f64(&((&c - &b) * (&c - &b) / &self.variance));
                let inner = exp_mgf_additive(alpha * (a / width), s)?;
                Ok((alpha * rational_to_f64(&c)).exp() * inner)
            }
            (true, None) => {
                // sum_k C_k a^k alpha^{2k} / (2k)!
                let a = rational_to_f64(&self.variance);
                let policy = SeriesPolicy::default();
                let x = alpha * alpha * a;
                let mut term = Complex64::new(1.0, 0.0);
                let mut sum = term;
                let mut converged = false;
                for k in 0..policy.max_terms {
                    let kf = k as f64;
                    term *= x / ((kf + 1.0) * (kf + 2.0));
                    sum += term;
                    if term.norm() <= policy.relative_tolerance * sum.norm() {
                        converged = true;
                        break;
                    }
                }
                if !converged {
                    return Err(Error::SeriesNonConvergence {
                        terms: policy.max_terms,
                    });
                }
                Ok((alpha * rational_to_f64(&self.total_shift())).exp() * sum)
            }
            (false, Some((b, c))) => {
                let (bf, cf) = (rational_to_f64(&b), rational_to_f64(&c));
                Ok(((alpha * cf).exp() - (alpha * bf).exp()) / (alpha * (cf - bf)))
            }
            (false, None) => Ok((alpha * rational_to_f64(&self.total_shift())).exp()),
        }
    }
}

/// Normal form of an additive (non-exponentiated) measure.
pub fn additive_params(spec: &MeasureSpec) -> Result<AdditiveParams> {
    match spec {
        MeasureSpec::Semicircle { variance } => Ok(AdditiveParams {
            variance: variance.clone(),
            uniform: None,
            shift: BigRational::zero(),
        }),
        MeasureSpec::Uniform { b, c } => Ok(AdditiveParams {
            variance: BigRational::zero(),
            uniform: Some((b.clone(), c.clone())),
            shift: BigRational::zero(),
        }),
        MeasureSpec::Dirac { c } => Ok(AdditiveParams::dirac(c.clone())),
        MeasureSpec::BoxPlus(parts) => {
            let mut acc = AdditiveParams::dirac(BigRational::zero());
            for part in parts {
                acc = acc.combine(additive_params(part)?)?;
            }
            Ok(acc)
        }
        MeasureSpec::Scaled { factor, inner } => Ok(additive_params(inner)?.scale(factor)),
        MeasureSpec::ExpPushforward(_) | MeasureSpec::Nu { .. } => Err(Error::UnsupportedMeasure(
            "free convolution is only resolved for semicircle, uniform and point-mass laws".into(),
        )),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MomentOrder {
    Integer(usize),
    Complex(Complex64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Evaluation {
    ExactPolynomial,
    Numeric,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentQuery {
    pub measure: MeasureSpec,
    pub order: MomentOrder,
    pub evaluation: Evaluation,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MomentValue {
    Exact(BigRational),
    Real(f64),
    Complex(Complex64),
}

impl MomentValue {
    pub fn to_complex(&self) -> Complex64 {
        match self {
            MomentValue::Exact(v) => Complex64::new(rational_to_f64(v), 0.0),
            MomentValue::Real(v) => Complex64::new(*v, 0.0),
            MomentValue::Complex(v) => *v,
        }
    }
}

fn is_positive_support(spec: &MeasureSpec) -> bool {
    match spec {
        MeasureSpec::Nu { .. } | MeasureSpec::ExpPushforward(_) => true,
        MeasureSpec::Scaled { factor, inner } => factor.is_positive() && is_positive_support(inner),
        _ => false,
    }
}

/// Complex-order moment `int x^alpha d mu` for laws on `(0, inf)`.
fn complex_moment(spec: &MeasureSpec, alpha: Complex64) -> Result<Complex64> {
    match spec {
        MeasureSpec::Nu { t } => fractional_moment_nu(alpha, *t),
        MeasureSpec::ExpPushforward(inner) => additive_params(inner)?.exp_moment(alpha),
        MeasureSpec::Scaled { factor, inner } if factor.is_positive() => {
            let log_factor = rational_to_f64(factor).ln();
            Ok((alpha * log_factor).exp() * complex_moment(inner, alpha)?)
        }
        _ => Err(Error::UnsupportedMeasure(
            "complex moments need a law on the positive half-line".into(),
        )),
    }
}

fn integer_numeric(spec: &MeasureSpec, n: usize) -> Result<f64> {
    match spec {
        MeasureSpec::Nu { t } => {
            if n == 0 {
                Ok(1.0)
            } else {
                moments_nu_laguerre(n, *t)
            }
        }
        MeasureSpec::ExpPushforward(inner) => {
            Ok(additive_params(inner)?.exp_moment(Complex64::new(n as f64, 0.0))?.re)
        }
        MeasureSpec::Scaled { factor, inner } if is_positive_support(inner) => {
            Ok(rational_to_f64(factor).powi(n as i32) * integer_numeric(inner, n)?)
        }
        other => Ok(rational_to_f64(&additive_params(other)?.moment(n)?)),
    }
}

/// Evaluates a moment query.
pub fn moment(query: &MomentQuery) -> Result<MomentValue> {
    query.measure.validate()?;
    match (query.order, query.evaluation) {
        (MomentOrder::Integer(n), Evaluation::ExactPolynomial) => {
            Ok(MomentValue::Exact(additive_params(&query.measure)?.moment(n)?))
        }
        (MomentOrder::Integer(n), Evaluation::Numeric) => {
            Ok(MomentValue::Real(integer_numeric(&query.measure, n)?))
        }
        (MomentOrder::Complex(alpha), _) => {
            if !is_positive_support(&query.measure) {
                return Err(Error::UnsupportedMeasure(
                    "complex exponents are only allowed for nu_t and exp-pushforwards".into(),
                ));
            }
            Ok(MomentValue::Complex(complex_moment(&query.measure, alpha)?))
        }
    }
}

/// Exact `n`-th moment of an additive measure.
pub fn exact_moment(spec: &MeasureSpec, n: usize) -> Result<BigRational> {
    match moment(&MomentQuery {
        measure: spec.clone(),
        order: MomentOrder::Integer(n),
        evaluation: Evaluation::ExactPolynomial,
    })? {
        MomentValue::Exact(v) => Ok(v),
        _ => unreachable!("exact evaluation returns a rational"),
    }
}

impl Default for AdditiveParams {
    fn default() -> Self {
        AdditiveParams::dirac(BigRational::zero())
    }
}
