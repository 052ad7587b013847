//! Uniform output of every test.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::Result;
use crate::law::NullLaw;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestMetadata {
    pub test: String,
    /// Per-group sample sizes; a single entry for one-sample tests.
    pub sizes: Vec<usize>,
    pub p: usize,
    pub tuning: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub standardized: f64,
    /// Absent for diagnostics that have no usable null law.
    pub null_law: Option<NullLaw>,
    /// Upper-tail probability of `standardized` under `null_law`.
    pub p_value: Option<f64>,
    pub metadata: TestMetadata,
}

impl TestResult {
    pub fn new(
        test: &str,
        sizes: Vec<usize>,
        p: usize,
        statistic: f64,
        standardized: f64,
        law: NullLaw,
    ) -> Result<Self> {
        let p_value = law.upper_tail(standardized)?;
        Ok(Self {
            statistic,
            standardized,
            null_law: Some(law),
            p_value: Some(p_value),
            metadata: TestMetadata { test: test.to_string(), sizes, p, tuning: BTreeMap::new(), notes: Vec::new() },
        })
    }

    /// A result with no null law, used for diagnostics only.
    pub fn diagnostic(test: &str, sizes: Vec<usize>, p: usize, statistic: f64) -> Self {
        Self {
            statistic,
            standardized: statistic,
            null_law: None,
            p_value: None,
            metadata: TestMetadata { test: test.to_string(), sizes, p, tuning: BTreeMap::new(), notes: Vec::new() },
        }
    }

    pub fn with_tuning(mut self, key: &str, value: f64) -> Self {
        self.metadata.tuning.insert(key.to_string(), value);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.metadata.notes.push(note.into());
        self
    }

    /// Whether the test rejects at level α; `None` without a null law.
    pub fn rejects(&self, alpha: f64) -> Option<bool> {
        self.p_value.map(|p| p <= alpha)
    }
}
