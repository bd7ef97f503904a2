//! Exact combinatorics: signed Stirling numbers of the first kind, rising
//! factorials, binomials, and exact checks of the double-sum Stirling identity
//! that drives the moment formula.
//!
//! Stirling numbers follow the standard signed convention
//! `x(x-1)...(x-n+1) = sum_k s(n,k) x^k`, which is equivalent to
//! `x^(n) = sum_k (-1)^(n-k) s(n,k) x^k` for the rising factorial.

use std::ops::{Add, Mul};
use std::sync::{Arc, OnceLock, RwLock};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Largest `n` accepted by [`stirling_via_log_series`].
pub const LOG_SERIES_CAP: usize = 64;

/// Dense triangular table of signed Stirling numbers of the first kind.
#[derive(Debug, Clone)]
pub struct StirlingTable {
    rows: Vec<Vec<BigInt>>,
}

impl StirlingTable {
    /// Builds rows `0..=max_n` from `s(n+1,k) = s(n,k-1) - n s(n,k)`.
    pub fn new(max_n: usize) -> Self {
        let mut rows: Vec<Vec<BigInt>> = Vec::with_capacity(max_n + 1);
        rows.push(vec![BigInt::one()]);
        for n in 0..max_n {
            let prev = &rows[n];
            let nn = BigInt::from(n);
            let mut next = vec![BigInt::zero(); n + 2];
            for (k, slot) in next.iter_mut().enumerate().skip(1) {
                let left = prev.get(k - 1).cloned().unwrap_or_default();
                let diag = prev.get(k).map(|v| &nn * v).unwrap_or_default();
                *slot = left - diag;
            }
            rows.push(next);
        }
        StirlingTable { rows }
    }

    pub fn max_n(&self) -> usize {
        self.rows.len() - 1
    }

    /// `s(n,k)`, reading out-of-range entries as zero.
    ///
    /// Panics if `n > max_n`.
    pub fn entry(&self, n: usize, k: usize) -> &BigInt {
        assert!(n <= self.max_n(), "row {n} beyond table size {}", self.max_n());
        self.rows[n].get(k).unwrap_or(&BigInt::ZERO)
    }

    pub fn row(&self, n: usize) -> &[BigInt] {
        &self.rows[n]
    }
}

fn shared_cache() -> &'static RwLock<Arc<StirlingTable>> {
    static CACHE: OnceLock<RwLock<Arc<StirlingTable>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(Arc::new(StirlingTable::new(64))))
}

/// Process-wide memoized table covering at least rows `0..=min_n`.
pub fn shared_table(min_n: usize) -> Arc<StirlingTable> {
    {
        let table = shared_cache().read().expect("stirling cache poisoned");
        if table.max_n() >= min_n {
            return Arc::clone(&table);
        }
    }
    let mut guard = shared_cache().write().expect("stirling cache poisoned");
    if guard.max_n() < min_n {
        let size = min_n.max(2 * guard.max_n());
        *guard = Arc::new(StirlingTable::new(size));
    }
    Arc::clone(&guard)
}

/// Signed Stirling number of the first kind `s(n,k)`.
pub fn stirling_first(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    shared_table(n).entry(n, k).clone()
}

/// `x (x+1) ... (x+n-1)`, with the empty product equal to one.
pub fn rising_factorial<T>(x: &T, n: usize) -> T
where
    T: Clone + One + Add<Output = T> + Mul<Output = T>,
{
    let mut acc = T::one();
    let mut factor = x.clone();
    for _ in 0..n {
        acc = acc * factor.clone();
        factor = factor + T::one();
    }
    acc
}

pub fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

/// `n choose k`, zero for `k > n`.
pub fn binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        // Each partial product is itself a binomial coefficient, so the division is exact.
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// `alpha (alpha-1) ... (alpha-k+1) / k!` for complex `alpha`.
pub fn generalized_binomial(alpha: Complex64, k: usize) -> Complex64 {
    (0..k).fold(Complex64::new(1.0, 0.0), |acc, i| {
        acc * (alpha - i as f64) / (i as f64 + 1.0)
    })
}

fn series_mul(a: &[BigRational], b: &[BigRational], degree: usize) -> Vec<BigRational> {
    let mut out = vec![BigRational::zero(); degree + 1];
    for (i, ai) in a.iter().enumerate().take(degree + 1) {
        if ai.is_zero() {
            continue;
        }
        for (j, bj) in b.iter().enumerate().take(degree + 1 - i) {
            if !bj.is_zero() {
                out[i + j] += ai * bj;
            }
        }
    }
    out
}

/// `s(n,k) = (n!/k!) [z^n] log^k(1+z)`, by exact truncated power-series arithmetic.
pub fn stirling_via_log_series(n: usize, k: usize) -> Result<BigRational> {
    if n > LOG_SERIES_CAP {
        return Err(Error::CapExceeded {
            n,
            cap: LOG_SERIES_CAP,
        });
    }
    if k > n {
        return Ok(BigRational::zero());
    }
    let log1p: Vec<BigRational> = (0..=n)
        .map(|m| {
            if m == 0 {
                BigRational::zero()
            } else {
                let sign = if m % 2 == 1 { 1 } else { -1 };
                BigRational::new(BigInt::from(sign), BigInt::from(m))
            }
        })
        .collect();
    let mut power = vec![BigRational::zero(); n + 1];
    power[0] = BigRational::one();
    for _ in 0..k {
        power = series_mul(&power, &log1p, n);
    }
    let scale = BigRational::new(factorial(n), factorial(k));
    Ok(&power[n] * scale)
}

/// Both sides of the double-sum Stirling identity at one `(l, m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityCheck {
    pub l: usize,
    pub m: usize,
    pub holds: bool,
    pub lhs: BigRational,
    pub rhs: BigRational,
}

/// Exact check of
///
/// `2 l s(1+m, 1+l) = (m+1)/(l+m-1) sum_{n=1}^{l} sum_{k=0}^{m-1}
///     C(l+m-2, n+k-1)^{-1} C(m,k) C(m,1+k) s(1+k,n) s(m-k,l+1-n)`.
pub fn verify_stirling_identity(l: usize, m: usize) -> Result<IdentityCheck> {
    if l == 0 || m == 0 {
        return Err(Error::InvalidArgument(format!(
            "l and m must be positive, got l = {l}, m = {m}"
        )));
    }
    let table = shared_table(m + l + 1);
    let lhs = BigRational::from_integer(BigInt::from(2 * l) * table.entry(1 + m, 1 + l));

    let mut sum = BigRational::zero();
    for n in 1..=l {
        for k in 0..m {
            let s1 = table.entry(1 + k, n);
            let s2 = table.entry(m - k, l + 1 - n);
            // Vanishing Stirling factors are skipped before the binomial is inverted.
            if s1.is_zero() || s2.is_zero() {
                continue;
            }
            let inverted = binomial(l + m - 2, n + k - 1);
            if inverted.is_zero() {
                return Err(Error::ZeroDivision { n, k });
            }
            let numer = binomial(m, k) * binomial(m, 1 + k) * s1 * s2;
            sum += BigRational::new(numer, inverted);
        }
    }
    let rhs = sum * BigRational::new(BigInt::from(m + 1), BigInt::from(l + m - 1));
    Ok(IdentityCheck {
        l,
        m,
        holds: lhs == rhs,
        lhs,
        rhs,
    })
}

/// `sum_{n=0}^{k} (-1)^n C(N,n) == (-1)^k C(N-1,k)`, exactly.
pub fn alternating_binomial_sum_check(big_n: usize, k: usize) -> Result<bool> {
    if big_n == 0 || k > big_n {
        return Err(Error::InvalidArgument(format!(
            "need N >= 1 and k <= N, got N = {big_n}, k = {k}"
        )));
    }
    let lhs = (0..=k).fold(BigInt::zero(), |acc, n| {
        let term = binomial(big_n, n);
        if n % 2 == 0 {
            acc + term
        } else {
            acc - term
        }
    });
    let rhs = binomial(big_n - 1, k);
    let rhs = if k % 2 == 0 { rhs } else { -rhs };
    Ok(lhs == rhs)
}
