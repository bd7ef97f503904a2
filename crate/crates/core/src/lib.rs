//! Exact and numerical tools for the free positive multiplicative Brownian
//! motion `nu_t` and its additive companion `sc(2 sqrt t) ⊞ Unif[-t/2, t/2]`.
//!
//! * [`exactcomb`]: Stirling numbers of the first kind and related exact identities.
//! * [`specfun`]: Kummer's `1F1`, Laguerre polynomials and beta integrals.
//! * [`moments`], [`measure`]: exact moment polynomials and a small measure algebra.
//! * [`freeconv`]: Cauchy transforms, subordination and Stieltjes inversion.
//! * [`rmtlab`]: Monte Carlo random-matrix models.

pub mod error;
pub mod exactcomb;
pub mod freeconv;
pub mod measure;
pub mod moments;
pub mod polynomial;
pub mod quadrature;
pub mod rmtlab;
pub mod specfun;
pub mod suites;

pub use error::{Error, Result};
pub use polynomial::RationalPolynomial;
