//! Experiment reports and their CSV and JSON renderings.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use widomlab::{AsymptoticFit, TargetStatus};

use crate::config::ExperimentKind;

/// One output row. `r` holds the scan parameter of experiments that do not
/// scan `R` (magnitude, lattice size, ε, trial index).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    #[serde(rename = "R")]
    pub r: f64,
    pub value: f64,
    pub method: String,
    pub stderr: f64,
    pub wall_ms: f64,
}

impl Row {
    pub fn new(r: f64, value: f64, method: impl Into<String>, stderr: f64, wall_ms: f64) -> Self {
        Row {
            r,
            value,
            method: method.into(),
            stderr,
            wall_ms,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Comparison {
    /// `|measured - expected| ≤ tolerance · |expected|`.
    Relative,
    /// `|measured - expected| ≤ tolerance`.
    Absolute,
    /// `measured ≥ expected - tolerance`.
    AtLeast,
    /// `measured ≤ expected + tolerance`.
    AtMost,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Target {
    pub name: String,
    pub status: TargetStatus,
    pub expected: f64,
    pub measured: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub pass: bool,
}

impl Target {
    pub fn new(
        name: impl Into<String>,
        status: TargetStatus,
        expected: f64,
        measured: f64,
        tolerance: f64,
        comparison: Comparison,
    ) -> Self {
        let pass = match comparison {
            Comparison::Relative => (measured - expected).abs() <= tolerance * expected.abs(),
            Comparison::Absolute => (measured - expected).abs() <= tolerance,
            Comparison::AtLeast => measured >= expected - tolerance,
            Comparison::AtMost => measured <= expected + tolerance,
        };
        Target {
            name: name.into(),
            status,
            expected,
            measured,
            tolerance,
            comparison,
            pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitSummary {
    pub quantity: String,
    pub fit: AsymptoticFit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub experiment: ExperimentKind,
    pub seed: u64,
    /// Canonical text of the config that produced the report.
    pub config: String,
    pub rows: Vec<Row>,
    pub fits: Vec<FitSummary>,
    pub targets: Vec<Target>,
    pub notes: Vec<String>,
    pub pass: bool,
}

impl ExperimentReport {
    pub fn new(experiment: ExperimentKind, seed: u64, config: String) -> Self {
        ExperimentReport {
            experiment,
            seed,
            config,
            rows: Vec::new(),
            fits: Vec::new(),
            targets: Vec::new(),
            notes: Vec::new(),
            pass: true,
        }
    }

    /// Recomputes `pass` from the targets.
    pub fn finish(mut self) -> Self {
        self.pass = self.targets.iter().all(|t| t.pass);
        self
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        if self.rows.is_empty() {
            w.write_record(["R", "value", "method", "stderr", "wall_ms"])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Writes `<experiment>.csv` and `<experiment>.json` into `dir`.
    pub fn write_files(&self, dir: &Path) -> std::io::Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let csv_path = dir.join(format!("{}.csv", self.experiment));
        let json_path = dir.join(format!("{}.json", self.experiment));
        let mut buf = Vec::new();
        self.write_csv(&mut buf).map_err(std::io::Error::other)?;
        std::fs::write(&csv_path, buf)?;
        std::fs::write(&json_path, self.to_json().map_err(std::io::Error::other)?)?;
        Ok((csv_path, json_path))
    }

    /// Human-readable lines for the terminal.
    pub fn summary(&self) -> Vec<String> {
        let mut lines = vec![format!("{}: {} rows", self.experiment, self.rows.len())];
        for f in &self.fits {
            lines.push(format!(
                "  fit {}: log coefficient {:.6} ± {:.2e}, area coefficient {:.6}",
                f.quantity, f.fit.log_coefficient, f.fit.log_stderr, f.fit.area_coefficient
            ));
        }
        for t in &self.targets {
            let status = match t.status {
                TargetStatus::Theorem => "theorem",
                TargetStatus::Conjectural => "conjectural",
            };
            lines.push(format!(
                "  [{}] {} ({status}): measured {:.6e}, expected {:.6e}, tolerance {:.1e}",
                if t.pass { "PASS" } else { "FAIL" },
                t.name,
                t.measured,
                t.expected,
                t.tolerance
            ));
        }
        for n in &self.notes {
            lines.push(format!("  note: {n}"));
        }
        lines
    }
}
