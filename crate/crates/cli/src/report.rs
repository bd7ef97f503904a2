//! Rendering of command results as aligned tables, CSV or JSON.

use std::fmt::Write as _;

use clap::ValueEnum;
use serde_json::{json, Map, Value};

use freebm::freeconv::SubordinationConfig;
use freebm::specfun::SeriesPolicy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

/// One command's output: header parameters, a table, and a JSON body.
pub struct Report {
    pub title: String,
    /// Command parameters, echoed in the header after the engine defaults.
    pub parameters: Vec<(String, Value)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// Extra JSON fields beside `command`, `defaults` and `parameters`.
    pub body: Map<String, Value>,
    /// Set when a verification inside the command failed.
    pub failed: bool,
}

impl Report {
    pub fn new(title: &str) -> Self {
        Report {
            title: title.into(),
            parameters: Vec::new(),
            columns: Vec::new(),
            rows: Vec::new(),
            body: Map::new(),
            failed: false,
        }
    }

    pub fn param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.parameters.push((key.into(), value.into()));
        self
    }

    pub fn columns(mut self, names: &[&str]) -> Self {
        self.columns = names.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Table => self.render_table(),
            Format::Csv => self.render_csv(),
            Format::Json => self.render_json(),
        }
    }

    fn header_lines(&self) -> Vec<String> {
        let mut lines = vec![self.title.clone()];
        for (key, value) in engine_defaults().iter().chain(&self.parameters) {
            lines.push(format!("{key} = {}", plain(value)));
        }
        lines
    }

    fn render_table(&self) -> String {
        let mut out = String::new();
        for line in self.header_lines() {
            let _ = writeln!(out, "# {line}");
        }
        let widths: Vec<usize> = (0..self.columns.len())
            .map(|i| {
                self.rows
                    .iter()
                    .map(|r| r[i].chars().count())
                    .chain([self.columns[i].chars().count()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |cells: &[String]| {
            cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect::<Vec<_>>()
                .join("  ")
                .trim_end()
                .to_string()
        };
        let _ = writeln!(out, "{}", line(&self.columns));
        for row in &self.rows {
            let _ = writeln!(out, "{}", line(row));
        }
        out
    }

    /// Bare CSV so the output parses as-is; the defaults live in the table and
    /// JSON headers.
    fn render_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|c| csv_cell(c)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    fn render_json(&self) -> String {
        let mut root = Map::new();
        root.insert("command".into(), Value::String(self.title.clone()));
        root.insert("defaults".into(), Value::Object(engine_defaults().into_iter().collect()));
        root.insert(
            "parameters".into(),
            Value::Object(self.parameters.iter().cloned().collect()),
        );
        for (k, v) in &self.body {
            root.insert(k.clone(), v.clone());
        }
        let mut text = serde_json::to_string_pretty(&Value::Object(root)).expect("JSON value");
        text.push('\n');
        text
    }
}

fn csv_cell(cell: &str) -> String {
    if cell.contains([',', '"', '\n']) {
        format!("\"{}\"", cell.replace('"', "\"\""))
    } else {
        cell.to_string()
    }
}

fn plain(value: &Value) -> String {
    match value {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Engine settings that are not command flags.
pub fn engine_defaults() -> Vec<(String, Value)> {
    let series = SeriesPolicy::default();
    let sub = SubordinationConfig::default();
    vec![
        ("series_relative_tolerance".into(), json!(series.relative_tolerance)),
        ("series_max_terms".into(), json!(series.max_terms)),
        ("subordination_damping".into(), json!(sub.damping)),
        ("subordination_tolerance".into(), json!(sub.tolerance)),
        ("subordination_max_iterations".into(), json!(sub.max_iterations)),
    ]
}

/// `a+bi` / `a-bi` with shortest round-trip components.
pub fn format_complex(z: num_complex::Complex64) -> String {
    if z.im.is_sign_negative() {
        format!("{}-{}i", z.re, -z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}
