//! Monte Carlo spectra of the two matrix models behind the exact engines.
//!
//! * Additive: `M = B + (t/N) diag(rho)` with `rho = (-N+1, -N+3, ..., N-1)` and
//!   `B` Hermitian Gaussian with `E|B_ij|^2 = t/N`; its spectrum approaches
//!   `sc(2 sqrt t) ⊞ Unif[-t, t]`.
//! * Multiplicative: `H = G G*` where `G` is a discretized left-invariant
//!   Brownian motion on `GL(N, C)` run to time `t/2`; its spectrum approaches `nu_t`.
//!
//! Every trial draws from its own ChaCha20 stream: the generator is seeded with
//! `seed_from_u64(seed)` and moved to stream `trial`, so results do not depend
//! on scheduling or thread count.

use std::fmt::Write as _;

use matrixmultiply::{zgemm, CGemmOption};
use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::{moments_nu_laguerre, moments_sc_unif_general, rational_from_f64, rational_to_f64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Additive,
    Multiplicative,
}

/// Per-step increment of the multiplicative model.
///
/// `Euler` uses `G <- G (I + dC)`; `Exponential` uses `G <- G exp(dC)` with the
/// exponential truncated after the fourth-order term. Circular Gaussian
/// increments have `E[dC^2] = 0`, so neither needs an Itô drift correction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IncrementScheme {
    #[default]
    Euler,
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdditiveModelConfig {
    pub n: usize,
    pub t: f64,
    pub seed: u64,
}

impl AdditiveModelConfig {
    pub fn validate(&self) -> Result<()> {
        validate_size_and_time(self.n, self.t)
    }
}

/// `steps >= ceil(10 t)` keeps the discretization bias well under the Monte
/// Carlo error; it is not enforced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiplicativeModelConfig {
    pub n: usize,
    pub t: f64,
    pub steps: usize,
    pub seed: u64,
    pub scheme: IncrementScheme,
}

impl MultiplicativeModelConfig {
    pub fn validate(&self) -> Result<()> {
        validate_size_and_time(self.n, self.t)?;
        if self.steps == 0 {
            return Err(Error::InvalidArgument("steps must be at least 1".into()));
        }
        Ok(())
    }
}

fn validate_size_and_time(n: usize, t: f64) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("matrix size must be at least 2, got {n}")));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("t must be positive, got {t}")));
    }
    Ok(())
}

/// Sorted eigenvalues of one sampled matrix plus what produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalSpectrum {
    pub eigenvalues: Vec<f64>,
    pub model: ModelKind,
    pub n: usize,
    pub t: f64,
    pub seed: u64,
    pub stream: u64,
    pub steps: Option<usize>,
}

impl EmpiricalSpectrum {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,eigenvalue\n");
        for (i, v) in self.eigenvalues.iter().enumerate() {
            let _ = writeln!(out, "{i},{v}");
        }
        out
    }

    /// Eigenvalues back from the `index,eigenvalue` CSV layout.
    pub fn parse_csv(text: &str) -> Result<Vec<f64>> {
        let mut lines = text.lines();
        match lines.next().map(str::trim) {
            Some("index,eigenvalue") => {}
            other => return Err(Error::Parse(format!("unexpected CSV header {other:?}"))),
        }
        lines
            .filter(|l| !l.trim().is_empty())
            .map(|line| {
                let (_, v) = line
                    .split_once(',')
                    .ok_or_else(|| Error::Parse(format!("malformed CSV row {line:?}")))?;
                v.trim().parse().map_err(|_| Error::Parse(v.into()))
            })
            .collect()
    }
}

fn trial_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn complex_normal<R: Rng>(rng: &mut R, sd: f64) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(sd * re, sd * im)
}

/// Hermitian Gaussian matrix with `E|M_ij|^2 = s/N`: real `N(0, s/N)` on the
/// diagonal, real and imaginary parts `N(0, s/2N)` above it.
pub fn hermitian_noise<R: Rng>(n: usize, s: f64, rng: &mut R) -> DMatrix<Complex64> {
    let diag_sd = (s / n as f64).sqrt();
    let off_sd = (s / (2.0 * n as f64)).sqrt();
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for j in 0..n {
        let d: f64 = rng.sample(StandardNormal);
        m[(j, j)] = Complex64::new(diag_sd * d, 0.0);
        for i in j + 1..n {
            let z = complex_normal(rng, off_sd);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    m
}

/// Sorted eigenvalues of a Hermitian matrix.
pub fn hermitian_eigenvalues(m: DMatrix<Complex64>) -> Result<Vec<f64>> {
    let mut values: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigensolver("non-finite eigenvalue".into()));
    }
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// The drift `(t/N) rho_i`, an equally spaced grid strictly inside `[-t, t]`.
pub fn drift_diagonal(n: usize, t: f64) -> Vec<f64> {
    (0..n)
        .map(|i| t * (2.0 * i as f64 + 1.0 - n as f64) / n as f64)
        .collect()
}

pub fn sample_additive(config: &AdditiveModelConfig) -> Result<EmpiricalSpectrum> {
    sample_additive_stream(config, 0)
}

pub fn sample_additive_stream(config: &AdditiveModelConfig, stream: u64) -> Result<EmpiricalSpectrum> {
    config.validate()?;
    let mut rng = trial_rng(config.seed, stream);
    let mut m = hermitian_noise(config.n, config.t, &mut rng);
    for (i, d) in drift_diagonal(config.n, config.t).into_iter().enumerate() {
        m[(i, i)] += d;
    }
    Ok(EmpiricalSpectrum {
        eigenvalues: hermitian_eigenvalues(m)?,
        model: ModelKind::Additive,
        n: config.n,
        t: config.t,
        seed: config.seed,
        stream,
        steps: None,
    })
}

/// `c <- alpha a b + beta c` for row-major `n x n` matrices.
fn gemm(n: usize, alpha: f64, a: &[Complex64], b: &[Complex64], beta: f64, c: &mut [Complex64]) {
    assert!(a.len() == n * n && b.len() == n * n && c.len() == n * n);
    let rs = n as isize;
    // SAFETY: Complex64 is repr(C) with layout [f64; 2]; all three buffers hold
    // n*n elements, are addressed with strides (n, 1), and `c` is not aliased.
    unsafe {
        zgemm(
            CGemmOption::Standard,
            CGemmOption::Standard,
            n,
            n,
            n,
            [alpha, 0.0],
            a.as_ptr().cast(),
            rs,
            1,
            b.as_ptr().cast(),
            rs,
            1,
            [beta, 0.0],
            c.as_mut_ptr().cast(),
            rs,
            1,
        );
    }
}

/// `G_{t/2}` after `steps` increments with `E|dC_ij|^2 = delta/N`, `delta = t/(2 steps)`.
fn multiplicative_path(config: &MultiplicativeModelConfig, rng: &mut ChaCha20Rng) -> Vec<Complex64> {
    let n = config.n;
    let delta = config.t / 2.0 / config.steps as f64;
    let sd = (delta / (2.0 * n as f64)).sqrt();
    let mut g = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        g[i * n + i] = Complex64::new(1.0, 0.0);
    }
    let mut next = g.clone();
    let mut increment = vec![Complex64::new(0.0, 0.0); n * n];
    let mut term = Vec::new();
    let mut scratch = Vec::new();
    for _ in 0..config.steps {
        for z in increment.iter_mut() {
            *z = complex_normal(rng, sd);
        }
        next.copy_from_slice(&g);
        match config.scheme {
            IncrementScheme::Euler => gemm(n, 1.0, &g, &increment, 1.0, &mut next),
            IncrementScheme::Exponential => {
                // G exp(dC) = sum_k G dC^k / k!, accumulated term by term.
                term.clone_from(&g);
                scratch.resize(n * n, Complex64::new(0.0, 0.0));
                for k in 1..=4 {
                    gemm(n, 1.0 / k as f64, &term, &increment, 0.0, &mut scratch);
                    std::mem::swap(&mut term, &mut scratch);
                    for (acc, v) in next.iter_mut().zip(&term) {
                        *acc += v;
                    }
                }
            }
        }
        std::mem::swap(&mut g, &mut next);
    }
    g
}

pub fn sample_multiplicative(config: &MultiplicativeModelConfig) -> Result<EmpiricalSpectrum> {
    sample_multiplicative_stream(config, 0)
}

pub fn sample_multiplicative_stream(
    config: &MultiplicativeModelConfig,
    stream: u64,
) -> Result<EmpiricalSpectrum> {
    config.validate()?;
    let n = config.n;
    let mut rng = trial_rng(config.seed, stream);
    let g = multiplicative_path(config, &mut rng);
    let mut g_adjoint = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            g_adjoint[i * n + j] = g[j * n + i].conj();
        }
    }
    let mut h = vec![Complex64::new(0.0, 0.0); n * n];
    gemm(n, 1.0, &g, &g_adjoint, 0.0, &mut h);
    let hermitian = DMatrix::from_fn(n, n, |i, j| 0.5 * (h[i * n + j] + h[j * n + i].conj()));
    let eigenvalues = hermitian_eigenvalues(hermitian)?;
    if eigenvalues[0] <= 0.0 {
        return Err(Error::Positivity { value: eigenvalues[0] });
    }
    Ok(EmpiricalSpectrum {
        eigenvalues,
        model: ModelKind::Multiplicative,
        n,
        t: config.t,
        seed: config.seed,
        stream,
        steps: Some(config.steps),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectralTransform {
    Identity,
    Log,
}

/// `(1/N) sum_i f(lambda_i)^n` for `n = 1..=n_max`, with `f` the identity or `log`.
pub fn empirical_moments(
    spectrum: &EmpiricalSpectrum,
    n_max: usize,
    transform: SpectralTransform,
) -> Result<Vec<f64>> {
    let values: Vec<f64> = match transform {
        SpectralTransform::Identity => spectrum.eigenvalues.clone(),
        SpectralTransform::Log => spectrum
            .eigenvalues
            .iter()
            .map(|&v| {
                if v > 0.0 {
                    Ok(v.ln())
                } else {
                    Err(Error::Positivity { value: v })
                }
            })
            .collect::<Result<_>>()?,
    };
    Ok(power_means(&values, n_max))
}

fn power_means(values: &[f64], n_max: usize) -> Vec<f64> {
    let mut sums = vec![0.0; n_max];
    for &v in values {
        let mut p = 1.0;
        for s in sums.iter_mut() {
            p *= v;
            *s += p;
        }
    }
    let count = values.len() as f64;
    sums.into_iter().map(|s| s / count).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceConfig {
    pub model: ModelKind,
    pub t: f64,
    pub sizes: Vec<usize>,
    pub trials: usize,
    pub n_max: usize,
    pub seed: u64,
    /// Only used by the multiplicative model.
    pub steps: usize,
    pub scheme: IncrementScheme,
}

/// Settings echoed in every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDefaults {
    pub rng: String,
    pub steps: Option<usize>,
    pub scheme: Option<IncrementScheme>,
    /// Relative errors divide by `max(|m_n|, m_2^{n/2})`.
    pub error_scale: String,
    /// Allowed increase of the error between sizes, in combined standard errors.
    pub noise_sigmas: f64,
}

/// Averages over trials at one matrix size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    #[serde(rename = "N")]
    pub size: usize,
    /// Mean empirical moments, orders `1..=n_max`.
    pub moments: Vec<f64>,
    pub std_err: Vec<f64>,
    pub oracle: Vec<f64>,
    pub rel_err: Vec<f64>,
    pub max_rel_err: f64,
    /// Standard error of the moment attaining `max_rel_err`, on the same scale.
    pub max_rel_std_err: f64,
    /// Multiplicative model only: moments of the log-spectrum against the
    /// additive limit `sc(2 sqrt t) ⊞ Unif[-t/2, t/2]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_moments: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_std_err: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_oracle: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub model: ModelKind,
    pub t: f64,
    pub trials: usize,
    pub seed: u64,
    pub n_max: usize,
    pub defaults: ReportDefaults,
    pub rows: Vec<ConvergenceRow>,
    /// Whether `max_rel_err` decreases along the sizes up to statistical noise.
    pub monotone: bool,
}

pub const NOISE_SIGMAS: f64 = 3.0;

/// Exact moments `1..=n_max` of `sc(sqrt(4a)) ⊞ Unif[b, c]` as floats.
fn additive_oracle(a: f64, b: f64, c: f64, n_max: usize) -> Result<Vec<f64>> {
    let (a, b, c) = (rational_from_f64(a)?, rational_from_f64(b)?, rational_from_f64(c)?);
    (1..=n_max)
        .map(|n| moments_sc_unif_general(n, &a, &b, &c).map(|m| rational_to_f64(&m)))
        .collect()
}

/// Exact moments of the limiting law of the model, orders `1..=n_max`.
pub fn model_oracle(model: ModelKind, t: f64, n_max: usize) -> Result<Vec<f64>> {
    match model {
        ModelKind::Additive => additive_oracle(t, -t, t, n_max),
        ModelKind::Multiplicative => (1..=n_max).map(|n| moments_nu_laguerre(n, t)).collect(),
    }
}

/// Error scale `max(|m_n|, m_2^{n/2})`, which stays meaningful for vanishing odd moments.
fn error_scales(model: ModelKind, t: f64, oracle: &[f64]) -> Result<Vec<f64>> {
    let second = match oracle.get(1) {
        Some(&m2) => m2,
        None => model_oracle(model, t, 2)?[1],
    };
    Ok(oracle
        .iter()
        .enumerate()
        .map(|(i, m)| m.abs().max(second.powf((i + 1) as f64 / 2.0)))
        .collect())
}

fn mean_and_std_err(samples: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let count = samples.len() as f64;
    let width = samples.first().map_or(0, Vec::len);
    let mut mean = vec![0.0; width];
    for s in samples {
        for (m, v) in mean.iter_mut().zip(s) {
            *m += v / count;
        }
    }
    let std_err = (0..width)
        .map(|k| {
            if samples.len() < 2 {
                return f64::NAN;
            }
            let var = samples.iter().map(|s| (s[k] - mean[k]).powi(2)).sum::<f64>() / (count - 1.0);
            (var / count).sqrt()
        })
        .collect();
    (mean, std_err)
}

/// `errors[i+1] <= errors[i] + sigmas * sqrt(se_i^2 + se_{i+1}^2)` for every
/// consecutive pair, and the last error below the first.
pub fn decreasing_up_to_noise(errors: &[f64], std_errs: &[f64], sigmas: f64) -> bool {
    let stepwise = errors.windows(2).zip(std_errs.windows(2)).all(|(e, s)| {
        e[1] <= e[0] + sigmas * (s[0] * s[0] + s[1] * s[1]).sqrt()
    });
    let overall = match (errors.first(), errors.last()) {
        (Some(first), Some(last)) if errors.len() > 1 => last < first,
        _ => true,
    };
    stepwise && overall
}

/// Runs `trials` independent samples at each size and compares the averaged
/// moments with the exact limit.
pub fn convergence_report(config: &ConvergenceConfig) -> Result<ConvergenceReport> {
    if config.sizes.is_empty() || config.trials == 0 || config.n_max == 0 {
        return Err(Error::InvalidArgument(
            "need at least one size, one trial and n_max >= 1".into(),
        ));
    }
    let oracle = model_oracle(config.model, config.t, config.n_max)?;
    let scales = error_scales(config.model, config.t, &oracle)?;
    let log_oracle = match config.model {
        ModelKind::Multiplicative => Some(additive_oracle(config.t, -config.t / 2.0, config.t / 2.0, config.n_max)?),
        ModelKind::Additive => None,
    };

    let mut rows = Vec::with_capacity(config.sizes.len());
    for &size in &config.sizes {
        let spectra = (0..config.trials as u64)
            .into_par_iter()
            .map(|trial| match config.model {
                ModelKind::Additive => sample_additive_stream(
                    &AdditiveModelConfig { n: size, t: config.t, seed: config.seed },
                    trial,
                ),
                ModelKind::Multiplicative => sample_multiplicative_stream(
                    &MultiplicativeModelConfig {
                        n: size,
                        t: config.t,
                        steps: config.steps,
                        seed: config.seed,
                        scheme: config.scheme,
                    },
                    trial,
                ),
            })
            .collect::<Result<Vec<_>>>()?;
        let samples = spectra
            .iter()
            .map(|s| empirical_moments(s, config.n_max, SpectralTransform::Identity))
            .collect::<Result<Vec<_>>>()?;
        let (moments, std_err) = mean_and_std_err(&samples);
        let rel_err: Vec<f64> = moments
            .iter()
            .zip(&oracle)
            .zip(&scales)
            .map(|((m, o), s)| (m - o).abs() / s)
            .collect();
        let worst = (0..rel_err.len())
            .max_by(|&i, &j| rel_err[i].total_cmp(&rel_err[j]))
            .expect("n_max >= 1");
        let (log_moments, log_std_err) = match config.model {
            ModelKind::Multiplicative => {
                let logs = spectra
                    .iter()
                    .map(|s| empirical_moments(s, config.n_max, SpectralTransform::Log))
                    .collect::<Result<Vec<_>>>()?;
                let (m, se) = mean_and_std_err(&logs);
                (Some(m), Some(se))
            }
            ModelKind::Additive => (None, None),
        };
        rows.push(ConvergenceRow {
            size,
            max_rel_err: rel_err[worst],
            max_rel_std_err: std_err[worst] / scales[worst],
            moments,
            std_err,
            oracle: oracle.clone(),
            rel_err,
            log_moments,
            log_std_err,
            log_oracle: log_oracle.clone(),
        });
    }

    let errors: Vec<f64> = rows.iter().map(|r| r.max_rel_err).collect();
    let std_errs: Vec<f64> = rows.iter().map(|r| r.max_rel_std_err).collect();
    let multiplicative = config.model == ModelKind::Multiplicative;
    Ok(ConvergenceReport {
        model: config.model,
        t: config.t,
        trials: config.trials,
        seed: config.seed,
        n_max: config.n_max,
        defaults: ReportDefaults {
            rng: "ChaCha20Rng::seed_from_u64(seed), stream = trial index".into(),
            steps: multiplicative.then_some(config.steps),
            scheme: multiplicative.then_some(config.scheme),
            error_scale: "max(|m_n|, m_2^(n/2))".into(),
            noise_sigmas: NOISE_SIGMAS,
        },
        monotone: decreasing_up_to_noise(&errors, &std_errs, NOISE_SIGMAS),
        rows,
    })
}

/// Second moment of the drift grid, `t^2 (N^2 - 1) / (3 N^2)`; its mean is zero.
pub fn drift_second_moment(n: usize, t: &BigRational) -> BigRational {
    let n = BigInt::from(n);
    let n2 = &n * &n;
    t * t * BigRational::new(&n2 - 1, 3 * n2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn additive(n: usize, t: f64, seed: u64) -> AdditiveModelConfig {
        AdditiveModelConfig { n, t, seed }
    }

    fn multiplicative(n: usize, t: f64, steps: usize, seed: u64) -> MultiplicativeModelConfig {
        MultiplicativeModelConfig {
            n,
            t,
            steps,
            seed,
            scheme: IncrementScheme::Euler,
        }
    }

    #[test]
    fn validation() {
        assert!(sample_additive(&additive(1, 1.0, 0)).is_err());
        assert!(sample_additive(&additive(4, 0.0, 0)).is_err());
        assert!(sample_multiplicative(&multiplicative(4, 1.0, 0, 0)).is_err());
        assert!(sample_multiplicative(&multiplicative(4, -1.0, 3, 0)).is_err());
    }

    #[test]
    fn determinism_and_streams() {
        let cfg = additive(30, 1.0, 11);
        assert_eq!(sample_additive(&cfg).unwrap(), sample_additive(&cfg).unwrap());
        let other = sample_additive_stream(&cfg, 1).unwrap();
        assert_ne!(sample_additive(&cfg).unwrap().eigenvalues, other.eigenvalues);
        let cfg = multiplicative(20, 1.0, 10, 5);
        assert_eq!(
            sample_multiplicative(&cfg).unwrap(),
            sample_multiplicative(&cfg).unwrap()
        );
    }

    #[test]
    fn spectra_are_sorted() {
        let s = sample_additive(&additive(40, 2.0, 3)).unwrap();
        assert!(s.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        let s = sample_multiplicative(&multiplicative(40, 1.0, 20, 3)).unwrap();
        assert!(s.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        assert!(s.eigenvalues[0] > 0.0);
    }

    #[test]
    fn zero_noise_limit() {
        // Weyl: |lambda_i - (t/N) rho_i| <= ||B||, and ||B|| is about 2 sqrt(t).
        let n = 50;
        for t in [1e-4, 1e-8, 1e-12] {
            let s = sample_additive(&additive(n, t, 1)).unwrap();
            for (v, d) in s.eigenvalues.iter().zip(drift_diagonal(n, t)) {
                assert!((v - d).abs() <= 3.0 * t.sqrt());
            }
        }
        let s = sample_multiplicative(&multiplicative(20, 1e-10, 5, 1)).unwrap();
        assert!(s.eigenvalues.iter().all(|v| (v - 1.0).abs() < 1e-4));
    }

    #[test]
    fn drift_grid_is_symmetric_in_closed_interval() {
        for n in [2, 3, 10, 401] {
            let d = drift_diagonal(n, 1.5);
            assert!(d.iter().all(|v| v.abs() <= 1.5));
            let mean: f64 = d.iter().sum::<f64>() / n as f64;
            assert!(mean.abs() < 1e-15);
            let second: f64 = d.iter().map(|v| v * v).sum::<f64>() / n as f64;
            let exact = rational_to_f64(&drift_second_moment(n, &rational_from_f64(1.5).unwrap()));
            assert!((second - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn empirical_moment_examples() {
        let spectrum = EmpiricalSpectrum {
            eigenvalues: vec![1.0; 5],
            model: ModelKind::Multiplicative,
            n: 5,
            t: 1.0,
            seed: 0,
            stream: 0,
            steps: Some(1),
        };
        assert_eq!(empirical_moments(&spectrum, 4, SpectralTransform::Log).unwrap(), vec![0.0; 4]);
        let c = EmpiricalSpectrum {
            eigenvalues: vec![1.5; 3],
            ..spectrum.clone()
        };
        let m = empirical_moments(&c, 3, SpectralTransform::Identity).unwrap();
        assert_eq!(m, vec![1.5, 2.25, 3.375]);
        let bad = EmpiricalSpectrum {
            eigenvalues: vec![-1.0, 2.0],
            ..spectrum
        };
        assert!(empirical_moments(&bad, 2, SpectralTransform::Log).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let s = sample_additive(&additive(12, 0.7, 9)).unwrap();
        assert_eq!(EmpiricalSpectrum::parse_csv(&s.to_csv()).unwrap(), s.eigenvalues);
    }

    #[test]
    fn noise_entry_variance() {
        // E|M_ij|^2 = s/N on and off the diagonal
        let (n, s, reps) = (6, 2.0, 4000);
        let mut rng = trial_rng(3, 0);
        let (mut diag, mut off) = (0.0, 0.0);
        for _ in 0..reps {
            let m = hermitian_noise(n, s, &mut rng);
            diag += m[(0, 0)].norm_sqr();
            off += m[(2, 1)].norm_sqr();
        }
        let target = s / n as f64;
        assert!((diag / reps as f64 - target).abs() < 0.1 * target);
        assert!((off / reps as f64 - target).abs() < 0.1 * target);
    }

    #[test]
    fn noise_is_unitarily_invariant_in_law() {
        // Entry statistics of U B U* match those of B for a fixed unitary U.
        let (n, s, reps) = (5, 1.0, 6000);
        let mut rng = trial_rng(21, 0);
        let ginibre = DMatrix::from_fn(n, n, |_, _| complex_normal(&mut rng, 1.0));
        let u = ginibre.qr().q();
        let mut rng = trial_rng(21, 1);
        let mut stats = [0.0f64; 4];
        for _ in 0..reps {
            let b = hermitian_noise(n, s, &mut rng);
            let c = &u * &b * u.adjoint();
            stats[0] += b[(0, 0)].re.powi(2);
            stats[1] += c[(0, 0)].re.powi(2);
            stats[2] += b[(3, 1)].norm_sqr();
            stats[3] += c[(3, 1)].norm_sqr();
        }
        let target = s / n as f64;
        // each average has relative standard error of at most sqrt(2/reps)
        let tol = 4.0 * (2.0 / reps as f64).sqrt() * target;
        for v in stats {
            assert!((v / reps as f64 - target).abs() < tol, "{v}");
        }
    }

    #[test]
    fn schemes_agree_on_first_moment() {
        let base = multiplicative(40, 1.0, 50, 4);
        let exp_cfg = MultiplicativeModelConfig {
            scheme: IncrementScheme::Exponential,
            ..base
        };
        let mean = |cfg: &MultiplicativeModelConfig| {
            (0..8)
                .map(|k| {
                    let s = sample_multiplicative_stream(cfg, k).unwrap();
                    empirical_moments(&s, 1, SpectralTransform::Identity).unwrap()[0]
                })
                .sum::<f64>()
                / 8.0
        };
        let target = 0.5f64.exp();
        assert!((mean(&base) - target).abs() < 0.05 * target);
        assert!((mean(&exp_cfg) - target).abs() < 0.05 * target);
    }

    #[test]
    fn monotonicity_rule() {
        assert!(decreasing_up_to_noise(&[0.1, 0.05, 0.01], &[0.01, 0.01, 0.01], 3.0));
        assert!(decreasing_up_to_noise(&[0.1, 0.11, 0.01], &[0.01, 0.01, 0.01], 3.0));
        assert!(!decreasing_up_to_noise(&[0.1, 0.3, 0.01], &[0.01, 0.01, 0.01], 3.0));
        assert!(!decreasing_up_to_noise(&[0.01, 0.01], &[0.1, 0.1], 3.0));
    }

    #[test]
    fn std_err_shrinks_with_trials() {
        let run = |trials| {
            convergence_report(&ConvergenceConfig {
                model: ModelKind::Additive,
                t: 1.0,
                sizes: vec![10],
                trials,
                n_max: 2,
                seed: 2,
                steps: 1,
                scheme: IncrementScheme::Euler,
            })
            .unwrap()
            .rows[0]
                .std_err[1]
        };
        let ratio = run(25) / run(400);
        // ideal ratio is 4
        assert!((2.5..6.0).contains(&ratio), "{ratio}");
    }
}
