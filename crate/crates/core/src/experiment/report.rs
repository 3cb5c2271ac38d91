use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::RawConfig;
use crate::theory::TheoryPrediction;
use crate::Result;

/// One measured quantity, optionally compared with a target.
///
/// `pass` is `None` for descriptive rows.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultRow {
    pub name: String,
    pub value: f64,
    pub se: Option<f64>,
    pub target: Option<f64>,
    pub tolerance: Option<f64>,
    pub pass: Option<bool>,
}

impl ResultRow {
    pub fn describe(name: impl Into<String>, value: f64) -> Self {
        ResultRow {
            name: name.into(),
            value,
            se: None,
            target: None,
            tolerance: None,
            pass: None,
        }
    }

    pub fn with_se(mut self, se: f64) -> Self {
        self.se = Some(se);
        self
    }

    pub fn with_target(mut self, target: f64) -> Self {
        self.target = Some(target);
        self
    }

    /// Asserts `|value − target| <= tolerance`.
    pub fn within(name: impl Into<String>, value: f64, target: f64, tolerance: f64) -> Self {
        ResultRow {
            name: name.into(),
            value,
            se: None,
            target: Some(target),
            tolerance: Some(tolerance),
            pass: Some((value - target).abs() <= tolerance),
        }
    }

    /// Asserts `|value − target| <= k · se`.
    pub fn within_se(name: impl Into<String>, value: f64, se: f64, target: f64, k: f64) -> Self {
        let mut row = Self::within(name, value, target, k * se);
        row.se = Some(se);
        row
    }

    /// Asserts `value < threshold`, reported with target 0.
    pub fn below(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        ResultRow {
            name: name.into(),
            value,
            se: None,
            target: Some(0.0),
            tolerance: Some(threshold),
            pass: Some(value < threshold),
        }
    }

    /// A row whose pass flag was decided elsewhere.
    pub fn decided(name: impl Into<String>, value: f64, pass: bool) -> Self {
        ResultRow {
            pass: Some(pass),
            ..Self::describe(name, value)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub config: RawConfig,
    pub theory: TheoryPrediction,
    pub results: Vec<ResultRow>,
    pub seed: u64,
    pub version: &'static str,
    pub runtime_seconds: f64,
}

impl ExperimentReport {
    /// No asserted row failed.
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.pass != Some(false))
    }

    pub fn failures(&self) -> impl Iterator<Item = &ResultRow> {
        self.results.iter().filter(|r| r.pass == Some(false))
    }

    pub fn result(&self, name: &str) -> Option<&ResultRow> {
        self.results.iter().find(|r| r.name == name)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// A named file produced by a run.
#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub report: ExperimentReport,
    pub artifacts: Vec<Artifact>,
}

impl RunOutput {
    /// Writes `report.json` and every artifact into `dir`.
    ///
    /// Files are staged as `*.partial` and renamed once all are written; on
    /// failure the staged files are removed.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut files: Vec<(String, Vec<u8>)> = self
            .artifacts
            .iter()
            .map(|a| (a.name.clone(), a.bytes.clone()))
            .collect();
        files.push(("report.json".into(), self.report.to_json()?.into_bytes()));
        let mut staged: Vec<(PathBuf, PathBuf)> = Vec::new();
        let outcome = (|| -> Result<()> {
            for (name, bytes) in &files {
                let path = dir.join(name);
                let partial = dir.join(format!("{name}.partial"));
                fs::write(&partial, bytes)?;
                staged.push((partial, path));
            }
            for (partial, path) in &staged {
                fs::rename(partial, path)?;
            }
            Ok(())
        })();
        if let Err(e) = outcome {
            for (partial, _) in &staged {
                let _ = fs::remove_file(partial);
            }
            return Err(e);
        }
        Ok(staged.into_iter().map(|(_, p)| p).collect())
    }
}
