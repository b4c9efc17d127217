//! Run reports: a JSON summary plus CSV tables. CSV files carry only
//! computed values, so repeated runs with one config produce identical bytes;
//! wall-clock timings live in the JSON.

use crate::error::{Error, Result};
use serde::Serialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub tolerance: f64,
    /// Gated checks decide the exit status; others are logged only.
    pub gated: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CacheEvent {
    pub key: String,
    pub outcome: super::cache::CacheOutcome,
}

/// A named CSV table written next to the report.
#[derive(Debug, Clone, Serialize)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push<I: IntoIterator<Item = String>>(&mut self, row: I) {
        self.rows.push(row.into_iter().collect());
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub subcommand: String,
    /// SHA-256 of the canonical TOML of the effective config.
    pub config_hash: String,
    pub config: String,
    pub seed: u64,
    pub reproducible: bool,
    pub checks: Vec<Check>,
    pub timings: Vec<Timing>,
    pub cache: Vec<CacheEvent>,
    /// Subcommand-specific results.
    pub summary: serde_json::Value,
    pub error: Option<String>,
    pub artifacts: Vec<PathBuf>,
    #[serde(skip)]
    pub tables: Vec<Table>,
}

impl RunReport {
    pub fn new(subcommand: &str, config: String, seed: u64, reproducible: bool) -> Self {
        RunReport {
            subcommand: subcommand.into(),
            config_hash: super::cache::content_hash(&config),
            config,
            seed,
            reproducible,
            checks: Vec::new(),
            timings: Vec::new(),
            cache: Vec::new(),
            summary: serde_json::Value::Null,
            error: None,
            artifacts: Vec::new(),
            tables: Vec::new(),
        }
    }

    /// Records `measured ≤ tolerance`.
    pub fn at_most(&mut self, name: &str, measured: f64, tolerance: f64, gated: bool) {
        self.check(name, measured <= tolerance, measured, tolerance, gated, format!("≤ {tolerance:e}"));
    }

    /// Records `measured ≥ tolerance`.
    pub fn at_least(&mut self, name: &str, measured: f64, tolerance: f64, gated: bool) {
        self.check(name, measured >= tolerance, measured, tolerance, gated, format!("≥ {tolerance:e}"));
    }

    pub fn check(&mut self, name: &str, passed: bool, measured: f64, tolerance: f64, gated: bool, detail: String) {
        debug_assert!(self.checks.iter().all(|c| c.name != name), "check {name} recorded twice");
        self.checks.push(Check { name: name.into(), passed, measured, tolerance, gated, detail });
    }

    pub fn time(&mut self, stage: &str, seconds: f64) {
        self.timings.push(Timing { stage: stage.into(), seconds });
    }

    pub fn gated_failure(&self) -> bool {
        self.error.is_some() || self.checks.iter().any(|c| c.gated && !c.passed)
    }

    pub fn exit_code(&self) -> i32 {
        i32::from(self.gated_failure())
    }

    /// Writes `report.json`, `checks.csv` and every table into `dir`.
    pub fn write(&mut self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::from(e).context(format!("creating {}", dir.display())))?;
        let mut checks = Table::new("checks", &["name", "passed", "measured", "tolerance", "gated", "detail"]);
        for c in &self.checks {
            checks.push([c.name.clone(), c.passed.to_string(), c.measured.to_string(), c.tolerance.to_string(), c.gated.to_string(), c.detail.clone()]);
        }
        for t in std::iter::once(&checks).chain(&self.tables) {
            let path = dir.join(format!("{}.csv", t.name));
            write_csv(&path, t)?;
            if !self.artifacts.contains(&path) {
                self.artifacts.push(path);
            }
        }
        let json_path = dir.join("report.json");
        if !self.artifacts.contains(&json_path) {
            self.artifacts.push(json_path.clone());
        }
        let json = serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.into()))?;
        std::fs::write(&json_path, json).map_err(|e| Error::from(e).context(format!("writing {}", json_path.display())))?;
        Ok(())
    }
}

fn write_csv(path: &Path, t: &Table) -> Result<()> {
    let io = |e: csv::Error| Error::Io(e.into()).context(format!("writing {}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(&t.header).map_err(io)?;
    for r in &t.rows {
        w.write_record(r).map_err(io)?;
    }
    w.flush().map_err(|e| Error::from(e).context(format!("writing {}", path.display())))?;
    Ok(())
}

/// Shortest round-trip formatting, so equal values give equal bytes.
pub fn num(x: f64) -> String {
    x.to_string()
}
