//! Numerical free additive convolution of a semicircle with a uniform law.
//!
//! Cauchy transforms `G(z) = int dmu(x)/(z-x)` are evaluated on the upper
//! half-plane; the transform of `sc(R) ⊞ Unif[b,c]` comes from the
//! subordination equation `omega = z - (R^2/4) G_unif(omega)`, and densities
//! are recovered by Stieltjes inversion `-Im G(x + i eta) / pi`.

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point `z` with `Im z > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpperHalfPoint(Complex64);

impl UpperHalfPoint {
    pub fn new(z: Complex64) -> Result<Self> {
        if z.im > 0.0 && z.re.is_finite() && z.im.is_finite() {
            Ok(UpperHalfPoint(z))
        } else {
            Err(Error::InvalidArgument(format!("{z} is not in the upper half-plane")))
        }
    }

    pub fn from_parts(re: f64, im: f64) -> Result<Self> {
        Self::new(Complex64::new(re, im))
    }

    pub fn z(&self) -> Complex64 {
        self.0
    }
}

fn check_nevanlinna(g: Complex64, what: &str, z: Complex64) -> Result<Complex64> {
    if g.im < 0.0 && g.re.is_finite() {
        Ok(g)
    } else {
        Err(Error::Branch(format!("{what} at z = {z} gave G = {g} with Im G >= 0")))
    }
}

/// `log(1 + w)` without cancellation for small `|w|`.
fn complex_ln_1p(w: Complex64) -> Complex64 {
    let modulus = 0.5 * (w.re * (2.0 + w.re) + w.im * w.im).ln_1p();
    Complex64::new(modulus, w.im.atan2(1.0 + w.re))
}

/// Cauchy transform of the semicircle law of radius `R`,
/// `2 (z - sqrt(z^2 - R^2)) / R^2`, evaluated as `2 / (z + sqrt(z-R) sqrt(z+R))`.
pub fn cauchy_semicircle(z: UpperHalfPoint, radius: f64) -> Result<Complex64> {
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")));
    }
    let z = z.z();
    let root = (z - radius).sqrt() * (z + radius).sqrt();
    check_nevanlinna(2.0 / (z + root), "semicircle transform", z)
}

fn uniform_transform(z: Complex64, b: f64, c: f64) -> Complex64 {
    let width = c - b;
    // log((z-b)/(z-c)) = log(1 + (c-b)/(z-c)); the ratio stays off the negative axis on C+.
    let w = width / (z - c);
    if w.norm() < 0.5 {
        complex_ln_1p(w) / width
    } else {
        ((z - b).ln() - (z - c).ln()) / width
    }
}

fn uniform_derivative(z: Complex64, b: f64, c: f64) -> Complex64 {
    (1.0 / (z - b) - 1.0 / (z - c)) / (c - b)
}

/// Cauchy transform of `Unif[b,c]`, `log((z-b)/(z-c)) / (c-b)`.
pub fn cauchy_uniform(z: UpperHalfPoint, b: f64, c: f64) -> Result<Complex64> {
    if !(c > b) {
        return Err(Error::InvalidArgument(format!("need b < c, got [{b}, {c}]")));
    }
    check_nevanlinna(uniform_transform(z.z(), b, c), "uniform transform", z.z())
}

/// The law convolved with the semicircle: a uniform, or a point mass when the
/// interval has collapsed.
#[derive(Debug, Clone, Copy)]
enum Partner {
    Uniform { b: f64, c: f64 },
    Point { c: f64 },
}

impl Partner {
    fn new(b: f64, c: f64) -> Result<Self> {
        if !(b.is_finite() && c.is_finite()) || b > c {
            return Err(Error::InvalidArgument(format!("need b <= c, got [{b}, {c}]")));
        }
        Ok(if b == c {
            Partner::Point { c }
        } else {
            Partner::Uniform { b, c }
        })
    }

    fn transform(&self, w: Complex64) -> Complex64 {
        match *self {
            Partner::Uniform { b, c } => uniform_transform(w, b, c),
            Partner::Point { c } => 1.0 / (w - c),
        }
    }

    fn derivative(&self, w: Complex64) -> Complex64 {
        match *self {
            Partner::Uniform { b, c } => uniform_derivative(w, b, c),
            Partner::Point { c } => {
                let d = w - c;
                -1.0 / (d * d)
            }
        }
    }
}

/// Controls of the subordination solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubordinationConfig {
    /// Weight of the new iterate in `omega <- (1-damping) omega + damping f(omega)`.
    pub damping: f64,
    /// Stop when successive iterates differ by less than this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Attempt Newton steps on `omega + s G(omega) = z` every this many iterations
    /// (0 disables them).
    pub newton_every: usize,
}

impl Default for SubordinationConfig {
    fn default() -> Self {
        SubordinationConfig {
            damping: 0.5,
            tolerance: 1e-13,
            max_iterations: 10_000,
            newton_every: 16,
        }
    }
}

/// Newton's method on `omega + s G(omega) - z = 0`. Any root in the upper
/// half-plane is the subordination point, since the fixed point there is unique.
fn newton_polish(
    z: Complex64,
    variance: f64,
    partner: &Partner,
    start: Complex64,
    tolerance: f64,
) -> Option<Complex64> {
    let mut omega = start;
    for _ in 0..50 {
        let residual = omega + variance * partner.transform(omega) - z;
        let slope = 1.0 + variance * partner.derivative(omega);
        let step = residual / slope;
        if !(step.re.is_finite() && step.im.is_finite()) {
            return None;
        }
        omega -= step;
        if omega.im <= 0.0 {
            return None;
        }
        if step.norm() < tolerance {
            return Some(omega);
        }
    }
    None
}

/// Subordination point `omega(z)` with `G_{sc ⊞ nu}(z) = G_nu(omega(z))`.
fn subordination_point(
    z: Complex64,
    variance: f64,
    partner: &Partner,
    config: &SubordinationConfig,
) -> Result<Complex64> {
    let lambda = config.damping;
    let mut omega = z + Complex64::new(0.0, variance.sqrt());
    for iteration in 1..=config.max_iterations {
        let target = z - variance * partner.transform(omega);
        let mut next = omega * (1.0 - lambda) + target * lambda;
        if next.im < z.im {
            next.im = z.im;
        }
        let step = (next - omega).norm();
        omega = next;
        if step < config.tolerance {
            return Ok(omega);
        }
        if config.newton_every > 0 && iteration % config.newton_every == 0 {
            if let Some(root) = newton_polish(z, variance, partner, omega, config.tolerance) {
                if root.im >= z.im * (1.0 - 1e-12) {
                    return Ok(root);
                }
            }
        }
    }
    Err(Error::Subordination {
        z,
        iterations: config.max_iterations,
    })
}

/// Cauchy transform of `sc(R) ⊞ Unif[b,c]` (a point mass when `b = c`) with
/// the default solver configuration.
pub fn boxplus_cauchy(z: UpperHalfPoint, radius: f64, b: f64, c: f64) -> Result<Complex64> {
    boxplus_cauchy_with(z, radius, b, c, &SubordinationConfig::default())
}

pub fn boxplus_cauchy_with(
    z: UpperHalfPoint,
    radius: f64,
    b: f64,
    c: f64,
    config: &SubordinationConfig,
) -> Result<Complex64> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")));
    }
    let partner = Partner::new(b, c)?;
    let variance = radius * radius / 4.0;
    let omega = subordination_point(z.z(), variance, &partner, config)?;
    check_nevanlinna(partner.transform(omega), "subordinated transform", z.z())
}

/// Extracts the first `n_max + 1` moments from the large-`|z|` expansion
/// `G(iy) = sum_n m_n (iy)^{-n-1}`.
///
/// `-y Im G(iy)` and `-y^2 Re G(iy)` are power series in `h = 1/y^2` with
/// coefficients `(-1)^k m_{2k}` and `(-1)^k m_{2k+1}`; their coefficients are
/// read off by repeated Richardson extrapolation to `h = 0` over the given
/// heights.
pub fn asymptotic_moments<F>(transform: F, n_max: usize, heights: &[f64]) -> Result<Vec<f64>>
where
    F: Fn(UpperHalfPoint) -> Result<Complex64>,
{
    if heights.len() < 2 {
        return Err(Error::InvalidArgument("need at least two heights".into()));
    }
    let hs: Vec<f64> = heights.iter().map(|y| 1.0 / (y * y)).collect();
    let mut even = Vec::with_capacity(heights.len());
    let mut odd = Vec::with_capacity(heights.len());
    for &y in heights {
        let g = transform(UpperHalfPoint::from_parts(0.0, y)?)?;
        even.push(-y * g.im);
        odd.push(-y * y * g.re);
    }
    let even_coeffs = extrapolated_coefficients(&hs, even, n_max / 2 + 1);
    let odd_coeffs = extrapolated_coefficients(&hs, odd, n_max.div_ceil(2));
    Ok((0..=n_max)
        .map(|n| {
            let k = n / 2;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let c = if n % 2 == 0 { even_coeffs[k] } else { odd_coeffs[k] };
            sign * c
        })
        .collect())
}

/// Heights `r {4, 8, 16, 32, 64}` for [`asymptotic_moments`], where
/// `r = R + max(|b|, |c|)` bounds the support of `sc(R) ⊞ Unif[b,c]`; the
/// expansion in `1/y` converges only for `y > r`.
pub fn moment_heights(radius: f64, b: f64, c: f64) -> Vec<f64> {
    let r = radius + b.abs().max(c.abs());
    [4.0, 8.0, 16.0, 32.0, 64.0].iter().map(|k| k * r).collect()
}

/// Neville extrapolation of `(xs, values)` to `x = 0`.
fn neville_at_zero(xs: &[f64], values: &[f64]) -> f64 {
    let mut p = values.to_vec();
    let n = xs.len();
    for level in 1..n {
        for i in 0..n - level {
            let (xi, xj) = (xs[i], xs[i + level]);
            p[i] = (xj * p[i] - xi * p[i + 1]) / (xj - xi);
        }
    }
    p[0]
}

fn extrapolated_coefficients(xs: &[f64], mut values: Vec<f64>, count: usize) -> Vec<f64> {
    let mut coeffs = Vec::with_capacity(count);
    for _ in 0..count {
        let c = neville_at_zero(xs, &values);
        coeffs.push(c);
        for (v, &x) in values.iter_mut().zip(xs) {
            *v = (*v - c) / x;
        }
    }
    coeffs
}

/// A sampled density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    pub abscissae: Vec<f64>,
    pub values: Vec<f64>,
    /// Distance from the real axis used in the Stieltjes inversion.
    pub eta: f64,
    pub mass_estimate: f64,
}

/// Closed interval `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportInterval {
    pub lower: f64,
    pub upper: f64,
}

fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

impl DensityGrid {
    pub fn new(abscissae: Vec<f64>, values: Vec<f64>, eta: f64) -> Result<Self> {
        if abscissae.len() != values.len() || abscissae.len() < 2 {
            return Err(Error::InvalidArgument(
                "grid needs at least two points and matching lengths".into(),
            ));
        }
        if abscissae.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("abscissae must be strictly increasing".into()));
        }
        if values.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidArgument("density values must be nonnegative".into()));
        }
        let mass_estimate = trapezoid(&abscissae, &values);
        Ok(DensityGrid {
            abscissae,
            values,
            eta,
            mass_estimate,
        })
    }

    pub fn len(&self) -> usize {
        self.abscissae.len()
    }

    pub fn is_empty(&self) -> bool {
        self.abscissae.is_empty()
    }

    /// Trapezoidal `int x^n density(x) dx` over the grid.
    pub fn moment(&self, n: usize) -> f64 {
        let weighted: Vec<f64> = self
            .abscissae
            .iter()
            .zip(&self.values)
            .map(|(x, v)| x.powi(n as i32) * v)
            .collect();
        trapezoid(&self.abscissae, &weighted)
    }

    /// Outermost crossings of `threshold`, linearly interpolated between grid
    /// points; `None` if the density never exceeds it.
    pub fn support_above(&self, threshold: f64) -> Option<SupportInterval> {
        let first = self.values.iter().position(|&v| v > threshold)?;
        let last = self.values.iter().rposition(|&v| v > threshold)?;
        let crossing = |i: usize, j: usize| {
            let (x0, x1, v0, v1) = (
                self.abscissae[i],
                self.abscissae[j],
                self.values[i],
                self.values[j],
            );
            x0 + (threshold - v0) * (x1 - x0) / (v1 - v0)
        };
        let lower = if first == 0 {
            self.abscissae[0]
        } else {
            crossing(first - 1, first)
        };
        let upper = if last + 1 == self.len() {
            self.abscissae[last]
        } else {
            crossing(last, last + 1)
        };
        Some(SupportInterval { lower, upper })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,density\n");
        for (x, v) in self.abscissae.iter().zip(&self.values) {
            let _ = writeln!(out, "{x},{v}");
        }
        out
    }

    /// Parses the `x,density` CSV layout; `eta` is not part of the CSV.
    pub fn from_csv(text: &str, eta: f64) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next().map(str::trim) {
            Some("x,density") => {}
            other => return Err(Error::Parse(format!("unexpected CSV header {other:?}"))),
        }
        let mut xs = Vec::new();
        let mut vs = Vec::new();
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let (x, v) = line
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("malformed CSV row {line:?}")))?;
            xs.push(x.trim().parse().map_err(|_| Error::Parse(x.into()))?);
            vs.push(v.trim().parse().map_err(|_| Error::Parse(v.into()))?);
        }
        DensityGrid::new(xs, vs, eta)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("grid serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Equally spaced grid on `[x_lo, x_hi]`.
pub fn linspace(x_lo: f64, x_hi: f64, points: usize) -> Vec<f64> {
    let step = (x_hi - x_lo) / (points - 1) as f64;
    (0..points)
        .map(|i| if i + 1 == points { x_hi } else { x_lo + step * i as f64 })
        .collect()
}

/// Density of `sc(R) ⊞ Unif[b,c]` by Stieltjes inversion at height `eta`
/// on `points` equally spaced abscissae.
pub fn density_grid(
    radius: f64,
    b: f64,
    c: f64,
    x_lo: f64,
    x_hi: f64,
    points: usize,
    eta: f64,
) -> Result<DensityGrid> {
    if !(x_lo < x_hi) || points < 2 || !(eta > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need x_lo < x_hi, points >= 2 and eta > 0; got [{x_lo}, {x_hi}], {points}, {eta}"
        )));
    }
    let xs = linspace(x_lo, x_hi, points);
    density_on(radius, b, c, xs, eta)
}

/// Stieltjes-inversion density on arbitrary strictly increasing abscissae.
pub fn density_on(radius: f64, b: f64, c: f64, xs: Vec<f64>, eta: f64) -> Result<DensityGrid> {
    let config = SubordinationConfig::default();
    let values = xs
        .par_iter()
        .map(|&x| {
            let z = UpperHalfPoint::from_parts(x, eta)?;
            let g = boxplus_cauchy_with(z, radius, b, c, &config)?;
            Ok(-g.im / std::f64::consts::PI)
        })
        .collect::<Result<Vec<f64>>>()?;
    DensityGrid::new(xs, values, eta)
}

/// Image of a log-variable density under `x -> e^x`: abscissae `e^{x_i}`,
/// values `density(x_i) e^{-x_i}`.
pub fn exp_pushforward_density(grid: &DensityGrid) -> DensityGrid {
    let abscissae: Vec<f64> = grid.abscissae.iter().map(|x| x.exp()).collect();
    let values: Vec<f64> = grid
        .values
        .iter()
        .zip(&grid.abscissae)
        .map(|(v, x)| v * (-x).exp())
        .collect();
    let mass_estimate = trapezoid(&abscissae, &values);
    DensityGrid {
        abscissae,
        values,
        eta: grid.eta,
        mass_estimate,
    }
}

/// Closed-form support of `nu_t`: the known endpoints for `nu_{2s}` at `s = t/2`,
/// `[((t+1) - 2 r) e^{-r}, ((t+1) + 2 r) e^{r}]` with `r = sqrt((t/2)(1+t/2))`.
pub fn support_nu(t: f64) -> Result<SupportInterval> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("t must be positive, got {t}")));
    }
    let s = t / 2.0;
    let r = (s * (1.0 + s)).sqrt();
    Ok(SupportInterval {
        lower: ((2.0 * s + 1.0) - 2.0 * r) * (-r).exp(),
        upper: ((2.0 * s + 1.0) + 2.0 * r) * r.exp(),
    })
}

/// Support of `nu_t` from the edge condition of the subordination map.
///
/// For `sc(2 sqrt t) ⊞ Unif[-a, a]` with `a = t/2`, the real map
/// `omega -> omega + t G_unif(omega)` has its critical point where
/// `omega^2 = a^2 + t`; its value there is the upper edge of the additive law,
/// and the edges of `nu_t` are its exponentials. In closed form this is
/// `[((t+2) - q)/2 e^{-q/2}, ((t+2) + q)/2 e^{q/2}]` with `q = sqrt(t (t+4))`.
pub fn support_nu_edge_equation(t: f64) -> Result<SupportInterval> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("t must be positive, got {t}")));
    }
    let a = t / 2.0;
    let omega = (a * a + t).sqrt();
    // t G_unif(omega) = (t / 2a) log((omega + a)/(omega - a)), and t / 2a = 1
    let edge = omega + ((omega + a) / (omega - a)).ln();
    Ok(SupportInterval {
        lower: (-edge).exp(),
        upper: edge.exp(),
    })
}

/// Window `[-(R + (c-b)/2), R + (c-b)/2]` around the center of `sc(R) ⊞ Unif[b,c]`
/// widened by `margin` on each side; it always contains the support.
pub fn support_window(radius: f64, b: f64, c: f64, margin: f64) -> (f64, f64) {
    let center = 0.5 * (b + c);
    let half = radius + 0.5 * (c - b) + margin;
    (center - half, center + half)
}

/// Log-scale density of `sc(2 sqrt t) ⊞ Unif[-t/2, t/2]`, whose exponential
/// image is `nu_t`.
pub fn nu_log_density(t: f64, points: usize, eta: f64) -> Result<DensityGrid> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("t must be positive, got {t}")));
    }
    let radius = 2.0 * t.sqrt();
    let (lo, hi) = support_window(radius, -t / 2.0, t / 2.0, 3.0 * eta);
    density_grid(radius, -t / 2.0, t / 2.0, lo, hi, points, eta)
}
