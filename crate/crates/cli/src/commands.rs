use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use num_complex::Complex64;
use serde_json::{json, Value};

use freebm::freeconv::{
    exp_pushforward_density, nu_log_density, support_nu, support_nu_edge_equation, SupportInterval,
};
use freebm::moments::{
    exp_mgf_additive, fractional_moment_nu_series, m_n_polynomial, moments_nu_laguerre,
    moments_ode_oracle, rational_to_f64, FRACTIONAL_AGREEMENT, THEOREM_MAIN_TOLERANCE,
};
use freebm::polynomial::parse_rational;
use freebm::rmtlab::{
    convergence_report, AdditiveModelConfig, ConvergenceConfig, IncrementScheme, ModelKind,
    MultiplicativeModelConfig,
};
use freebm::suites::{self, SuiteReport, DEFAULT_SUITE_SEED};
use freebm::{Error, RationalPolynomial};
use num_rational::BigRational;

use crate::report::{format_complex, Report};
use crate::{Cli, Command, Model, MomentMode, Scheme, Suite};

/// Runs the parsed command; `Ok(true)` means a verification failed.
pub fn run(cli: &Cli) -> Result<bool> {
    let report = match &cli.command {
        Command::Moments { n_max, mode, t, oracle } => moments(*n_max, *mode, t.as_deref(), *oracle)?,
        Command::Nu { n, alpha, t } => nu(*n, alpha.as_deref(), *t)?,
        Command::Verify { suite, l_max, m_max, n_max, t } => {
            verify(*suite, *l_max, *m_max, *n_max, t, cli.seed.unwrap_or(DEFAULT_SUITE_SEED))?
        }
        Command::Density { t, points, eta, exp, sidecar } => {
            let sidecar = sidecar
                .clone()
                .or_else(|| cli.out.as_ref().map(|p| sidecar_path(p)));
            density(*t, *points, *eta, *exp, sidecar.as_deref())?
        }
        Command::Simulate { model, sizes, t, trials, steps, scheme, n_max } => simulate(
            *model,
            sizes,
            *t,
            *trials,
            *steps,
            *scheme,
            *n_max,
            cli.seed.unwrap_or(0),
        )?,
    };
    let text = report.render(cli.format);
    match &cli.out {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("cannot write {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(report.failed)
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".support.json");
    PathBuf::from(name)
}

/// `p/q`, an integer, or a plain decimal, read exactly.
fn parse_exact(s: &str) -> Result<BigRational> {
    if let Ok(r) = parse_rational(s) {
        return Ok(r);
    }
    let (whole, frac) = s.trim().split_once('.').unwrap_or((s.trim(), ""));
    let negative = whole.starts_with('-');
    let digits = format!("{}{frac}", whole.trim_start_matches(['-', '+']));
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(Error::Parse(format!("not a rational or decimal: {s:?}")).into());
    }
    let numerator = parse_rational(&digits)?;
    let scale = BigRational::from_integer(num_bigint::BigInt::from(10u8).pow(frac.len() as u32));
    let value = numerator / scale;
    Ok(if negative { -value } else { value })
}

fn moments(n_max: usize, mode: MomentMode, t: Option<&str>, oracle: bool) -> Result<Report> {
    let polys: Vec<RationalPolynomial> = (0..=n_max).map(m_n_polynomial).collect();
    let oracle_polys = oracle.then(|| moments_ode_oracle(n_max));
    let diffs: Option<Vec<RationalPolynomial>> = oracle_polys
        .as_ref()
        .map(|o| polys.iter().zip(o).map(|(p, q)| p - q).collect());

    let mut report = Report::new("moments")
        .param("n_max", n_max)
        .param("mode", if mode == MomentMode::Polynomial { "polynomial" } else { "at-t" })
        .param("oracle", oracle);
    let mut rows_json = Vec::new();
    match mode {
        MomentMode::Polynomial => {
            if t.is_some() {
                bail!("--t is only used with --mode at-t");
            }
            report = report.columns(if oracle { &["n", "m_n", "oracle_diff"] } else { &["n", "m_n"] });
            for (n, p) in polys.iter().enumerate() {
                let mut row = vec![n.to_string(), p.to_string()];
                let mut entry = json!({ "n": n, "m_n": p, "display": p.to_string() });
                if let Some(d) = &diffs {
                    row.push(d[n].to_string());
                    entry["oracle_diff"] = json!(d[n]);
                }
                report.rows.push(row);
                rows_json.push(entry);
            }
        }
        MomentMode::AtT => {
            let t_text = t.context("--mode at-t needs --t")?;
            let t = parse_exact(t_text)?;
            if t <= BigRational::from_integer(0.into()) {
                return Err(Error::InvalidArgument(format!("t must be positive, got {t}")).into());
            }
            report = report.param("t", t.to_string());
            report = report.columns(if oracle {
                &["n", "exact", "value", "oracle_diff"]
            } else {
                &["n", "exact", "value"]
            });
            for (n, p) in polys.iter().enumerate() {
                let exact = p.evaluate(&t);
                let value = rational_to_f64(&exact);
                let mut row = vec![n.to_string(), exact.to_string(), value.to_string()];
                let mut entry = json!({ "n": n, "exact": exact.to_string(), "value": value });
                if let Some(d) = &diffs {
                    let diff = d[n].evaluate(&t);
                    row.push(diff.to_string());
                    entry["oracle_diff"] = json!(diff.to_string());
                }
                report.rows.push(row);
                rows_json.push(entry);
            }
        }
    }
    report.failed = diffs.is_some_and(|d| d.iter().any(|p| !p.is_zero()));
    report.body.insert("rows".into(), Value::Array(rows_json));
    Ok(report)
}

fn relative_gap(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm())
}

fn nu(n_max: Option<usize>, alpha: Option<&str>, t: f64) -> Result<Report> {
    let mut report = Report::new("nu").param("t", t);
    let mut rows_json = Vec::new();
    if let Some(text) = alpha {
        let alpha = Complex64::from_str(text.trim())
            .map_err(|_| Error::Parse(format!("malformed complex order {text:?}; expected a+bi")))?;
        let via_1f1 = (alpha * t / 2.0).exp() * exp_mgf_additive(alpha, t)?;
        let via_series = fractional_moment_nu_series(alpha, t)?;
        let gap = relative_gap(via_1f1, via_series);
        report = report
            .param("alpha", format_complex(alpha))
            .param("tolerance", FRACTIONAL_AGREEMENT)
            .columns(&["alpha", "via_1f1", "via_series", "rel_diff"]);
        report.rows.push(vec![
            format_complex(alpha),
            format_complex(via_1f1),
            format_complex(via_series),
            gap.to_string(),
        ]);
        rows_json.push(json!({
            "alpha": [alpha.re, alpha.im],
            "via_1f1": [via_1f1.re, via_1f1.im],
            "via_series": [via_series.re, via_series.im],
            "rel_diff": gap,
        }));
        report.failed = gap > FRACTIONAL_AGREEMENT;
    } else {
        let n_max = n_max.context("either --n or --alpha is required")?;
        report = report
            .param("n_max", n_max)
            .param("tolerance", THEOREM_MAIN_TOLERANCE)
            .columns(&["n", "laguerre", "via_1f1", "rel_diff"]);
        for n in 1..=n_max {
            let laguerre = moments_nu_laguerre(n, t)?;
            let order = Complex64::new(n as f64, 0.0);
            let via_1f1 = (order * t / 2.0).exp().re * exp_mgf_additive(order, t)?.re;
            let gap = (laguerre - via_1f1).abs() / laguerre.abs();
            report.failed |= gap > THEOREM_MAIN_TOLERANCE;
            report.rows.push(vec![
                n.to_string(),
                laguerre.to_string(),
                via_1f1.to_string(),
                gap.to_string(),
            ]);
            rows_json.push(json!({ "n": n, "laguerre": laguerre, "via_1f1": via_1f1, "rel_diff": gap }));
        }
    }
    report.body.insert("rows".into(), Value::Array(rows_json));
    Ok(report)
}

fn verify(suite: Suite, l_max: usize, m_max: usize, n_max: usize, ts: &[f64], seed: u64) -> Result<Report> {
    let reports: Vec<SuiteReport> = match suite {
        Suite::Stirling => vec![suites::stirling_suite(l_max, m_max)?],
        Suite::Kummer => vec![suites::kummer_suite(seed)?],
        Suite::TheoremMain => vec![suites::theorem_main_suite(n_max, ts)?],
        Suite::Moments => vec![suites::moment_polynomial_suite(30)],
        Suite::Fractional => vec![suites::fractional_suite(40, &[0.5, 2.0], seed)?],
        Suite::Density => vec![suites::density_suite()?],
        Suite::All => suites::all_suites(l_max, m_max, n_max, ts, seed)?,
    };
    let ts_json: Vec<Value> = ts.iter().map(|&t| json!(t)).collect();
    let mut report = Report::new("verify")
        .param("l_max", l_max)
        .param("m_max", m_max)
        .param("n_max", n_max)
        .param("t", Value::Array(ts_json))
        .param("seed", seed)
        .param("density_eta", suites::DENSITY_ETA)
        .param("density_points", suites::DENSITY_POINTS)
        .param("edge_eta", suites::EDGE_ETA)
        .param("edge_threshold", suites::EDGE_THRESHOLD)
        .columns(&["suite", "check", "status", "detail"]);
    for r in &reports {
        for c in &r.checks {
            report.rows.push(vec![
                r.suite.clone(),
                c.name.clone(),
                if c.passed { "PASS" } else { "FAIL" }.into(),
                c.detail.clone(),
            ]);
        }
    }
    report.failed = reports.iter().any(|r| !r.passed);
    report.body.insert("passed".into(), json!(!report.failed));
    report.body.insert("suites".into(), serde_json::to_value(&reports)?);
    Ok(report)
}

fn interval_json(s: &SupportInterval) -> Value {
    json!({ "lower": s.lower, "upper": s.upper })
}

fn density(t: f64, points: usize, eta: f64, exp: bool, sidecar: Option<&Path>) -> Result<Report> {
    let log_grid = nu_log_density(t, points, eta)?;
    let grid = if exp { exp_pushforward_density(&log_grid) } else { log_grid };
    let closed = support_nu(t)?;
    let edge = support_nu_edge_equation(t)?;
    let support = json!({
        "t": t,
        "scale": if exp { "exp" } else { "log" },
        "eta": eta,
        "points": points,
        "mass_estimate": grid.mass_estimate,
        "support_nu_closed_form": interval_json(&closed),
        "support_nu_edge_equation": interval_json(&edge),
        "log_support_closed_form": { "lower": closed.lower.ln(), "upper": closed.upper.ln() },
        "log_support_edge_equation": { "lower": edge.lower.ln(), "upper": edge.upper.ln() },
    });
    if let Some(path) = sidecar {
        let text = serde_json::to_string_pretty(&support)? + "\n";
        std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?;
    }
    let mut report = Report::new("density")
        .param("t", t)
        .param("points", points)
        .param("eta", eta)
        .param("scale", if exp { "exp" } else { "log" })
        .param("mass_estimate", grid.mass_estimate)
        .param(
            "support_nu_closed_form",
            format!("[{}, {}]", closed.lower, closed.upper),
        )
        .param(
            "support_nu_edge_equation",
            format!("[{}, {}]", edge.lower, edge.upper),
        )
        .columns(&["x", "density"]);
    report.rows = grid
        .abscissae
        .iter()
        .zip(&grid.values)
        .map(|(x, v)| vec![x.to_string(), v.to_string()])
        .collect();
    report.body.insert("grid".into(), serde_json::to_value(&grid)?);
    report.body.insert("support".into(), support);
    Ok(report)
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    model: Model,
    sizes: &[usize],
    t: f64,
    trials: usize,
    steps: usize,
    scheme: Scheme,
    n_max: usize,
    seed: u64,
) -> Result<Report> {
    let scheme = match scheme {
        Scheme::Euler => IncrementScheme::Euler,
        Scheme::Exponential => IncrementScheme::Exponential,
    };
    let kind = match model {
        Model::Additive => ModelKind::Additive,
        Model::Multiplicative => ModelKind::Multiplicative,
    };
    for &n in sizes {
        match kind {
            ModelKind::Additive => AdditiveModelConfig { n, t, seed }.validate()?,
            ModelKind::Multiplicative => {
                MultiplicativeModelConfig { n, t, steps, seed, scheme }.validate()?
            }
        }
    }
    if trials == 0 || n_max == 0 {
        return Err(Error::InvalidArgument("trials and n_max must be at least 1".into()).into());
    }
    let result = convergence_report(&ConvergenceConfig {
        model: kind,
        t,
        sizes: sizes.to_vec(),
        trials,
        n_max,
        seed,
        steps,
        scheme,
    })?;
    let sizes_json: Vec<Value> = sizes.iter().map(|&n| json!(n)).collect();
    let mut report = Report::new("simulate")
        .param("model", serde_json::to_value(kind)?)
        .param("N", Value::Array(sizes_json))
        .param("t", t)
        .param("trials", trials)
        .param("n_max", n_max)
        .param("seed", seed)
        .param("rng", result.defaults.rng.clone())
        .param("error_scale", result.defaults.error_scale.clone())
        .param("noise_sigmas", result.defaults.noise_sigmas);
    if kind == ModelKind::Multiplicative {
        report = report
            .param("steps", steps)
            .param("scheme", serde_json::to_value(scheme)?);
    }
    report = report
        .param("monotone", result.monotone)
        .columns(&["N", "transform", "n", "empirical", "std_err", "oracle", "rel_err"]);
    for row in &result.rows {
        for k in 0..n_max {
            report.rows.push(vec![
                row.size.to_string(),
                "identity".into(),
                (k + 1).to_string(),
                row.moments[k].to_string(),
                row.std_err[k].to_string(),
                row.oracle[k].to_string(),
                row.rel_err[k].to_string(),
            ]);
        }
        if let (Some(m), Some(se), Some(o)) = (&row.log_moments, &row.log_std_err, &row.log_oracle) {
            for k in 0..n_max {
                report.rows.push(vec![
                    row.size.to_string(),
                    "log".into(),
                    (k + 1).to_string(),
                    m[k].to_string(),
                    se[k].to_string(),
                    o[k].to_string(),
                    "".into(),
                ]);
            }
        }
    }
    report.body.insert("report".into(), serde_json::to_value(&result)?);
    Ok(report)
}
