use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::{Result, SqgError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    /// No tolerance applies; the record carries fitted constants only.
    Fitted,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Fitted => "fitted",
        }
    }

    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

/// One record of the structured text report.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: String,
    pub status: Status,
    pub tolerance: Option<f64>,
    /// Time range of the data the check used.
    pub range: (f64, f64),
    pub max_residual: f64,
    pub constants: Vec<(String, f64)>,
    pub notes: Vec<String>,
}

impl CheckReport {
    pub fn new(name: impl Into<String>, status: Status, range: (f64, f64)) -> Self {
        Self {
            name: name.into(),
            status,
            tolerance: None,
            range,
            max_residual: 0.0,
            constants: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }

    pub fn constant(&self, name: &str) -> Option<f64> {
        self.constants.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }

    pub fn with_constant(mut self, name: &str, value: f64) -> Self {
        self.constants.push((name.to_string(), value));
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    /// `key=value` fields separated by tabs.
    pub fn to_line(&self) -> String {
        let mut s = format!("check={}\tstatus={}", self.name, self.status.as_str());
        if let Some(tol) = self.tolerance {
            let _ = write!(s, "\ttol={tol:e}");
        }
        let _ = write!(
            s,
            "\trange=[{}, {}]\tmax_residual={:e}",
            self.range.0, self.range.1, self.max_residual
        );
        for (k, v) in &self.constants {
            let _ = write!(s, "\t{k}={v:.10e}");
        }
        for note in &self.notes {
            let _ = write!(s, "\tnote={}", note.replace(['\t', '\n'], " "));
        }
        s
    }
}

/// Report text with records ordered by check name.
pub fn render_reports(reports: &[CheckReport]) -> String {
    let mut sorted: Vec<&CheckReport> = reports.iter().collect();
    sorted.sort_by(|a, b| a.name.cmp(&b.name));
    let mut out = String::new();
    for r in sorted {
        out.push_str(&r.to_line());
        out.push('\n');
    }
    out
}

/// Two-column CSV with 17 significant digits.
pub fn write_series_csv<W: Write>(mut w: W, quantity: &str, series: &[(f64, f64)]) -> Result<()> {
    writeln!(w, "t,{quantity}")?;
    for (t, v) in series {
        writeln!(w, "{t:.16e},{v:.16e}")?;
    }
    Ok(())
}

/// Reads a series written by [`write_series_csv`] (header optional).
pub fn read_series_csv<R: BufRead>(r: R) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let (a, b) = match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), None) => (a.trim(), b.trim()),
            _ => {
                return Err(SqgError::InsufficientData(format!(
                    "line {}: expected two comma-separated columns",
                    lineno + 1
                )))
            }
        };
        match (a.parse::<f64>(), b.parse::<f64>()) {
            (Ok(t), Ok(v)) => out.push((t, v)),
            _ if lineno == 0 => continue,
            _ => {
                return Err(SqgError::InsufficientData(format!(
                    "line {}: not numeric: {line}",
                    lineno + 1
                )))
            }
        }
    }
    Ok(out)
}
