//! Tabular experiment reports with a schema header, a config hash on every
//! row, and a footer of recorded ceilings and verdicts.

use std::fmt::{self, Write as _};

use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Tsv,
}

impl Format {
    fn separator(self) -> char {
        match self {
            Format::Csv => ',',
            Format::Tsv => '\t',
        }
    }
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "tsv" => Ok(Format::Tsv),
            other => Err(format!("unknown format {other:?} (expected csv or tsv)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// Not enough data for the rule to say anything.
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "INCONCLUSIVE",
        })
    }
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

/// A single report cell.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<u32> for Cell {
    fn from(x: u32) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<i64> for Cell {
    fn from(x: i64) -> Self {
        Cell::Int(x)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

/// Shortest round-trip decimal, switching to exponent form for very small
/// or very large magnitudes.
pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if x.is_nan() {
        return "NaN".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    let a = x.abs();
    if (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => format_float(*x),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerdictLine {
    pub name: String,
    pub verdict: Verdict,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    command: String,
    config_hash: String,
    meta: Vec<(String, String)>,
    columns: Vec<String>,
    rows: Vec<Vec<Cell>>,
    ceilings: Vec<(String, f64)>,
    verdicts: Vec<VerdictLine>,
}

/// First 16 hex digits of SHA-256 over `text`.
pub fn config_hash(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().take(8).fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

impl ExperimentReport {
    pub fn new(command: impl Into<String>, config_hash: impl Into<String>, columns: &[&str]) -> Self {
        ExperimentReport {
            command: command.into(),
            config_hash: config_hash.into(),
            meta: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            ceilings: Vec::new(),
            verdicts: Vec::new(),
        }
    }

    pub fn command(&self) -> &str {
        &self.command
    }

    pub fn config_hash(&self) -> &str {
        &self.config_hash
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn ceilings(&self) -> &[(String, f64)] {
        &self.ceilings
    }

    pub fn verdicts(&self) -> &[VerdictLine] {
        &self.verdicts
    }

    pub fn add_meta(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.meta.push((key.into(), value.into()));
    }

    /// # Panics
    /// If the row width differs from the column count.
    pub fn push_row(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn record_ceiling(&mut self, name: impl Into<String>, value: f64) {
        self.ceilings.push((name.into(), value));
    }

    pub fn add_verdict(&mut self, name: impl Into<String>, verdict: Verdict, detail: impl Into<String>) {
        self.verdicts.push(VerdictLine {
            name: name.into(),
            verdict,
            detail: detail.into(),
        });
    }

    /// FAIL if any verdict failed, PASS otherwise.
    pub fn suite_verdict(&self) -> Verdict {
        if self.verdicts.iter().any(|v| v.verdict == Verdict::Fail) {
            Verdict::Fail
        } else {
            Verdict::Pass
        }
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn render(&self, format: Format) -> String {
        let sep = format.separator();
        let mut out = String::new();
        let _ = writeln!(out, "# schema={SCHEMA_VERSION}");
        let _ = writeln!(out, "# command={}", self.command);
        let _ = writeln!(out, "# config_hash={}", self.config_hash);
        for (k, v) in &self.meta {
            let _ = writeln!(out, "# {k}={v}");
        }
        let mut header = String::from("config_hash");
        for c in &self.columns {
            header.push(sep);
            header.push_str(c);
        }
        out.push_str(&header);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&self.config_hash);
            for cell in row {
                out.push(sep);
                out.push_str(&cell.render());
            }
            out.push('\n');
        }
        for (name, value) in &self.ceilings {
            let _ = writeln!(out, "# ceiling {name}={}", format_float(*value));
        }
        for v in &self.verdicts {
            if v.detail.is_empty() {
                let _ = writeln!(out, "# verdict {}: {}", v.name, v.verdict);
            } else {
                let _ = writeln!(out, "# verdict {}: {} ({})", v.name, v.verdict, v.detail);
            }
        }
        let _ = writeln!(out, "# suite: {}", self.suite_verdict());
        out
    }
}

/// Outcome of the no-blow-up rule on one series of `(scale, value)` points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlowUpCheck {
    pub top_max: f64,
    pub earlier_max: f64,
    pub verdict: Verdict,
}

/// The maximum over the top decade of scales, `[s_max/10, s_max]`, must not
/// exceed 1.05 times the maximum over the points below that decade.
pub fn no_blow_up(points: &[(f64, f64)]) -> BlowUpCheck {
    let s_max = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let cut = s_max / 10.0;
    let top_max = points
        .iter()
        .filter(|p| p.0 >= cut)
        .map(|p| p.1)
        .fold(f64::NEG_INFINITY, f64::max);
    let earlier_max = points
        .iter()
        .filter(|p| p.0 < cut)
        .map(|p| p.1)
        .fold(f64::NEG_INFINITY, f64::max);
    let verdict = if points.is_empty() || earlier_max == f64::NEG_INFINITY {
        Verdict::Inconclusive
    } else {
        Verdict::from_bool(top_max <= 1.05 * earlier_max)
    };
    BlowUpCheck {
        top_max,
        earlier_max,
        verdict,
    }
}

impl BlowUpCheck {
    pub fn detail(&self) -> String {
        format!(
            "top-decade max {} vs earlier max {}",
            format_float(self.top_max),
            format_float(self.earlier_max)
        )
    }
}
