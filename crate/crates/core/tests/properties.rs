//! Property tests of the invariants that span the public API.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{pow, One, Signed, ToPrimitive, Zero};
use proptest::prelude::*;

use freebm::exactcomb::{binomial, factorial, rising_factorial, stirling_first, stirling_via_log_series};
use freebm::freeconv::{boxplus_cauchy, cauchy_semicircle, cauchy_uniform, DensityGrid, UpperHalfPoint};
use freebm::moments::{m_n_polynomial, moments_sc_unif_general};
use freebm::rmtlab::{
    drift_diagonal, sample_additive, sample_multiplicative, AdditiveModelConfig, EmpiricalSpectrum,
    IncrementScheme, MultiplicativeModelConfig,
};
use freebm::specfun::{
    beta_integral_exact, euler_integral_1f1, kummer_1f1, kummer_1f1_direct, kummer_transform_check, laguerre,
    SeriesPolicy,
};
use freebm::RationalPolynomial;

fn r(p: i64, q: i64) -> BigRational {
    BigRational::new(p.into(), q.into())
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `1F1(a;b;x)` for integer `a <= 0` summed term by term in exact arithmetic.
fn exact_polynomial_1f1(a: i64, b: i64, x: f64) -> f64 {
    let x = BigRational::from_float(x).unwrap();
    let mut term = BigRational::one();
    let mut sum = BigRational::one();
    for j in 0..(-a) {
        term = term * r(a + j, (b + j) * (j + 1)) * &x;
        sum += &term;
    }
    sum.to_f64().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stirling_rows_give_rising_and_falling_factorials(n in 0usize..=20, x in -5i64..=5) {
        let xb = BigInt::from(x);
        let mut falling = BigInt::zero();
        let mut signed = BigInt::zero();
        for k in 0..=n {
            let term = stirling_first(n, k) * pow(xb.clone(), k);
            falling += &term;
            signed += if (n - k) % 2 == 0 { term } else { -term };
        }
        let expected_falling = (0..n as i64).fold(BigInt::one(), |acc, i| acc * (x - i));
        prop_assert_eq!(falling, expected_falling);
        prop_assert_eq!(signed, rising_factorial(&xb, n));
    }

    #[test]
    fn stirling_row_sums(n in 2usize..=40) {
        let row: Vec<BigInt> = (0..=n).map(|k| stirling_first(n, k)).collect();
        prop_assert!(row.iter().sum::<BigInt>().is_zero());
        prop_assert_eq!(row.iter().map(|v| v.abs()).sum::<BigInt>(), factorial(n));
    }

    #[test]
    fn log_series_matches_table(n in 0usize..=20, k_frac in 0.0f64..=1.0) {
        let k = (k_frac * n as f64).round() as usize;
        prop_assert_eq!(stirling_via_log_series(n, k).unwrap(), BigRational::from_integer(stirling_first(n, k)));
    }

    #[test]
    fn polynomial_1f1_matches_exact_sum(a in -8i64..=-1, x in -10.0f64..10.0) {
        let v = kummer_1f1_direct(c(a as f64, 0.0), c(2.0, 0.0), c(x, 0.0), &SeriesPolicy::default()).unwrap();
        let want = exact_polynomial_1f1(a, 2, x);
        prop_assert!((v.re - want).abs() <= 1e-13 * want.abs().max(1e-300), "{} vs {}", v.re, want);
    }

    #[test]
    fn euler_integral_matches_series(pair in 0usize..4, x in -5.0f64..5.0) {
        let (a, b) = [(1.0, 2.0), (2.0, 3.0), (1.0, 3.0), (2.0, 5.0)][pair];
        let series = kummer_1f1(c(a, 0.0), c(b, 0.0), c(x, 0.0), &SeriesPolicy::default()).unwrap().re;
        let quad = euler_integral_1f1(a, b, x).unwrap();
        prop_assert!((series - quad).abs() <= 1e-10 * series.abs());
    }

    #[test]
    fn kummer_transformation_holds(
        ar in -3.0f64..3.0, ai in -3.0f64..3.0, br in 0.5f64..4.0, bi in -2.0f64..2.0,
        xr in -5.0f64..5.0, xi in -5.0f64..5.0,
    ) {
        prop_assert!(kummer_transform_check(c(ar, ai), c(br, bi), c(xr, xi)).unwrap());
    }

    #[test]
    fn laguerre_is_terminating_1f1(n in 1usize..=15, ti in 0usize..4) {
        let t = [0.1, 0.5, 1.0, 2.0][ti];
        let x = -(n as f64) * t;
        let lag = laguerre(n - 1, 1.0, x) / n as f64;
        let f = kummer_1f1(c(1.0 - n as f64, 0.0), c(2.0, 0.0), c(x, 0.0), &SeriesPolicy::default()).unwrap().re;
        prop_assert!((lag - f).abs() <= 1e-12 * lag.abs());
    }

    #[test]
    fn beta_integral_normalization(n in 0usize..=20, k in 0usize..=20) {
        let v = beta_integral_exact(n, k)
            * BigRational::from_integer(BigInt::from(n + k + 1) * binomial(n + k, n));
        prop_assert!(v.is_one());
    }

    #[test]
    fn low_coefficients_vanish(n in 1usize..=30) {
        let p = m_n_polynomial(n);
        for k in 0..n.div_ceil(2) {
            prop_assert!(p.coeff(k).is_zero(), "n={} k={}", n, k);
        }
    }

    #[test]
    fn general_moments_shift_binomially(
        a in 1i64..12, b in -12i64..0, w in 1i64..12, n in 0usize..=12,
    ) {
        let (a, b, cc) = (r(a, 4), r(b, 3), r(b, 3) + r(w, 5));
        let direct = moments_sc_unif_general(n, &a, &b, &cc).unwrap();
        let mut shifted = BigRational::zero();
        for k in 0..=n {
            let base = moments_sc_unif_general(k, &a, &(&b - &cc), &BigRational::zero()).unwrap();
            shifted += BigRational::from_integer(binomial(n, k)) * pow(cc.clone(), n - k) * base;
        }
        prop_assert_eq!(direct, shifted);
    }

    #[test]
    fn symmetric_uniform_has_no_odd_moments(a in 1i64..20, w in 1i64..20, k in 0usize..8) {
        let half = r(w, 7);
        let m = moments_sc_unif_general(2 * k + 1, &r(a, 5), &-half.clone(), &half).unwrap();
        prop_assert!(m.is_zero());
    }

    #[test]
    fn subordinated_transform_is_nevanlinna(
        x in -6.0f64..6.0, y in 1e-4f64..5.0, radius in 0.1f64..4.0, b in -3.0f64..0.0, w in 0.0f64..3.0,
    ) {
        let z = UpperHalfPoint::from_parts(x, y).unwrap();
        let g = boxplus_cauchy(z, radius, b, b + w).unwrap();
        prop_assert!(g.im < 0.0);
        prop_assert!((1.0 / g).im >= y * (1.0 - 1e-9));
    }

    #[test]
    fn density_csv_round_trip_is_exact(values in proptest::collection::vec(0.0f64..10.0, 2..40), start in -5.0f64..0.0) {
        let xs: Vec<f64> = (0..values.len()).map(|i| start + 0.1 * i as f64).collect();
        let grid = DensityGrid::new(xs, values, 1e-3).unwrap();
        let back = DensityGrid::from_csv(&grid.to_csv(), 1e-3).unwrap();
        prop_assert_eq!(&back.abscissae, &grid.abscissae);
        prop_assert_eq!(&back.values, &grid.values);
        let back = DensityGrid::from_json(&grid.to_json()).unwrap();
        prop_assert_eq!(back, grid);
    }

    #[test]
    fn rational_polynomial_strings_round_trip(coeffs in proptest::collection::vec((-999i64..999, 1i64..99), 0..10)) {
        let p = RationalPolynomial::new(coeffs.iter().map(|&(p, q)| r(p, q)).collect());
        prop_assert_eq!(RationalPolynomial::from_strings(&p.to_strings()).unwrap(), p);
    }

    #[test]
    fn drift_is_symmetric_inside_the_interval(n in 1usize..300, t in 0.01f64..10.0) {
        let d = drift_diagonal(n, t);
        prop_assert!(d.iter().all(|v| v.abs() <= t));
        // the grid is symmetric, so pairing i with n-1-i cancels exactly
        for i in 0..n {
            prop_assert_eq!(d[i], -d[n - 1 - i]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn additive_sampling_is_deterministic(n in 2usize..40, seed in any::<u64>(), t in 0.1f64..3.0) {
        let config = AdditiveModelConfig { n, t, seed };
        let a = sample_additive(&config).unwrap();
        let b = sample_additive(&config).unwrap();
        prop_assert_eq!(&a, &b);
        let back = EmpiricalSpectrum::parse_csv(&a.to_csv()).unwrap();
        prop_assert_eq!(back, a.eigenvalues);
    }

    #[test]
    fn multiplicative_spectrum_is_positive_and_reproducible(n in 2usize..24, seed in any::<u64>(), t in 0.1f64..2.0) {
        for scheme in [IncrementScheme::Euler, IncrementScheme::Exponential] {
            let config = MultiplicativeModelConfig { n, t, steps: 30, seed, scheme };
            let a = sample_multiplicative(&config).unwrap();
            prop_assert!(a.eigenvalues.iter().all(|&v| v > 0.0));
            prop_assert_eq!(&a, &sample_multiplicative(&config).unwrap());
        }
    }
}

#[test]
fn degenerate_corners_are_continuous() {
    let z = UpperHalfPoint::from_parts(0.3, 0.7).unwrap();
    // vanishing semicircle radius tends to the bare uniform transform
    let bare = cauchy_uniform(z, -1.0, 0.5).unwrap();
    let near = boxplus_cauchy(z, 1e-5, -1.0, 0.5).unwrap();
    assert!((near - bare).norm() < 1e-8);
    // collapsing the uniform interval tends to a shifted semicircle
    let point = boxplus_cauchy(z, 1.5, 0.2, 0.2).unwrap();
    let shifted = cauchy_semicircle(UpperHalfPoint::from_parts(0.1, 0.7).unwrap(), 1.5).unwrap();
    assert!((point - shifted).norm() < 1e-12);
    let narrow = boxplus_cauchy(z, 1.5, 0.2, 0.2 + 1e-7).unwrap();
    assert!((narrow - point).norm() < 1e-6);
}

#[test]
fn moment_polynomials_evaluate_consistently() {
    // exact evaluation agrees with the floating-point path on a rational point
    for n in 0..=12 {
        let p = m_n_polynomial(n);
        let exact = p.evaluate(&r(3, 4)).to_f64().unwrap();
        let float = p.evaluate_f64(0.75);
        assert!((exact - float).abs() <= 1e-13 * exact.abs().max(1.0), "n={n}");
        assert!(p.coeff(n).is_positive() == (n % 2 == 0));
    }
}
