//! Check records and the report bundle written to disk.

use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::config::{RunConfig, TolSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// Informational: recorded, never fails the run.
    Info,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    pub name: String,
    /// Which statement of the theory the check exercises, or `plumbing`.
    pub anchor: String,
    pub status: Status,
    pub measured: Value,
    pub tolerance: Option<f64>,
}

impl Record {
    pub fn check(name: &str, anchor: &str, ok: bool, measured: Value, tol: Option<f64>) -> Self {
        Record {
            name: name.into(),
            anchor: anchor.into(),
            status: if ok { Status::Pass } else { Status::Fail },
            measured,
            tolerance: tol,
        }
    }

    pub fn info(name: &str, anchor: &str, measured: Value) -> Self {
        Record {
            name: name.into(),
            anchor: anchor.into(),
            status: Status::Info,
            measured,
            tolerance: None,
        }
    }

    pub fn error(name: &str, anchor: &str, err: impl std::fmt::Display) -> Self {
        Record::check(
            name,
            anchor,
            false,
            serde_json::json!({ "error": err.to_string() }),
            None,
        )
    }
}

/// Records plus plot-ready files produced by one check.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub records: Vec<Record>,
    pub files: Vec<(String, String)>,
}

impl Outcome {
    pub fn push(&mut self, r: Record) {
        self.records.push(r);
    }

    pub fn file(&mut self, name: &str, body: String) {
        self.files.push((name.into(), body));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub total: usize,
    pub pass: usize,
    pub fail: usize,
    pub info: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportBundle {
    pub command: String,
    pub seed: u64,
    pub grid_cap: usize,
    pub tolerances: TolSet,
    pub records: Vec<Record>,
    pub summary: Summary,
    /// Excluded from determinism comparisons.
    pub wall_clock_ms: u64,
    #[serde(skip)]
    pub files: Vec<(String, String)>,
}

impl ReportBundle {
    /// Sorts records by name and files by file name.
    pub fn assemble(cfg: &RunConfig, outcomes: Vec<Outcome>, wall_clock_ms: u64) -> Self {
        let mut records = Vec::new();
        let mut files = Vec::new();
        for o in outcomes {
            records.extend(o.records);
            files.extend(o.files);
        }
        records.sort_by(|a, b| a.name.cmp(&b.name));
        files.sort_by(|a, b| a.0.cmp(&b.0));
        let count = |s| records.iter().filter(|r| r.status == s).count();
        let summary = Summary {
            total: records.len(),
            pass: count(Status::Pass),
            fail: count(Status::Fail),
            info: count(Status::Info),
        };
        ReportBundle {
            command: cfg.command.name().into(),
            seed: cfg.seed,
            grid_cap: cfg.grid_cap,
            tolerances: cfg.tol,
            records,
            summary,
            wall_clock_ms,
            files,
        }
    }

    pub fn exit_code(&self) -> i32 {
        if self.summary.fail == 0 {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report is plain data");
        s.push('\n');
        s
    }

    pub fn write_to(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), self.to_json())?;
        for (name, body) in &self.files {
            std::fs::write(dir.join(name), body)?;
        }
        Ok(())
    }

    /// One `PASS|FAIL|INFO name` line per record, then the counts.
    pub fn text_summary(&self) -> String {
        let mut s = String::new();
        for r in &self.records {
            let tag = match r.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::Info => "INFO",
            };
            s.push_str(&format!("{tag} {}\n", r.name));
        }
        s.push_str(&format!(
            "{} checks: {} passed, {} failed, {} info\n",
            self.summary.total, self.summary.pass, self.summary.fail, self.summary.info
        ));
        s
    }
}
