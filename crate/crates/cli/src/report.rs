//! JSON report types and their table renderings.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use hdtest::NullLaw;
use serde::{Deserialize, Serialize};

/// Version of the report layouts; bumped whenever a field is added or removed.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Reject,
    Retain,
    /// The statistic is a diagnostic without a null law.
    NotApplicable,
}

/// Output of `hdtest test`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunReport {
    pub schema_version: u32,
    pub test: String,
    /// Total number of observations.
    pub n: usize,
    pub p: usize,
    /// Per-group sample sizes.
    pub sizes: Vec<usize>,
    /// Group labels in input order; file names when groups come from separate files.
    pub groups: Vec<String>,
    pub statistic: f64,
    pub standardized: f64,
    pub null_law: Option<NullLaw>,
    pub p_value: Option<f64>,
    pub alpha: f64,
    pub decision: Decision,
    pub tuning: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    pub warnings: Vec<String>,
}

impl RunReport {
    pub fn table(&self) -> String {
        let mut t = String::new();
        let row = |t: &mut String, k: &str, v: String| writeln!(t, "{k:<14} {v}").unwrap();
        row(&mut t, "test", self.test.clone());
        row(&mut t, "n", format!("{} {:?}", self.n, self.sizes));
        row(&mut t, "p", self.p.to_string());
        row(&mut t, "statistic", format!("{:.6}", self.statistic));
        row(&mut t, "standardized", format!("{:.6}", self.standardized));
        row(&mut t, "null law", self.null_law.map_or("none".into(), |l| format!("{l:?}")));
        row(&mut t, "p-value", self.p_value.map_or("none".into(), |p| format!("{p:.6}")));
        row(&mut t, "decision", format!("{:?} at α = {}", self.decision, self.alpha));
        for (k, v) in &self.tuning {
            row(&mut t, k, format!("{v:.6}"));
        }
        for n in &self.notes {
            row(&mut t, "note", n.clone());
        }
        for w in &self.warnings {
            row(&mut t, "warning", w.clone());
        }
        t
    }
}

/// Outcome of one scenario in a calibration batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Pass,
    Fail,
    /// Outside-theory scenario or no bands: reported, not asserted.
    NotAsserted,
    Error,
}

impl RowStatus {
    pub fn label(self) -> &'static str {
        match self {
            RowStatus::Pass => "pass",
            RowStatus::Fail => "fail",
            RowStatus::NotAsserted => "not_asserted",
            RowStatus::Error => "error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRow {
    pub scenario: String,
    pub file: String,
    pub test: String,
    pub empirical_size: Option<f64>,
    pub band: Option<[f64; 2]>,
    pub ks_distance: Option<f64>,
    pub ks_max: Option<f64>,
    pub mean_statistic: Option<f64>,
    pub status: RowStatus,
    pub misses: Vec<String>,
    pub error: Option<String>,
}

/// Output of `hdtest calibrate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSummary {
    pub schema_version: u32,
    pub rows: Vec<CalibrationRow>,
    pub passed: usize,
    pub failed: usize,
    pub not_asserted: usize,
    pub errors: usize,
}

impl CalibrationSummary {
    pub fn from_rows(rows: Vec<CalibrationRow>) -> Self {
        let count = |s: RowStatus| rows.iter().filter(|r| r.status == s).count();
        Self {
            schema_version: SCHEMA_VERSION,
            passed: count(RowStatus::Pass),
            failed: count(RowStatus::Fail),
            not_asserted: count(RowStatus::NotAsserted),
            errors: count(RowStatus::Error),
            rows,
        }
    }

    pub fn table(&self) -> String {
        let opt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4}"));
        let mut t = String::new();
        writeln!(t, "{:<10} {:<28} {:>8} {:>16} {:>8} {:<12}", "test", "scenario", "size", "band", "ks", "status")
            .unwrap();
        for r in &self.rows {
            let band = r.band.map_or("-".to_string(), |b| format!("[{}, {}]", b[0], b[1]));
            writeln!(
                t,
                "{:<10} {:<28} {:>8} {:>16} {:>8} {:<12}",
                r.test,
                r.scenario,
                opt(r.empirical_size),
                band,
                opt(r.ks_distance),
                r.status.label()
            )
            .unwrap();
        }
        writeln!(
            t,
            "passed {}, failed {}, not asserted {}, errors {}",
            self.passed, self.failed, self.not_asserted, self.errors
        )
        .unwrap();
        t
    }
}
