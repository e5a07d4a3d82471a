use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{ExperimentConfig, OutputFormat};
use crate::bounds::BoundReport;
use crate::metrics::DistanceEstimate;
use crate::Result;

/// How a check's outcome affects the run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tier {
    /// Must pass; a failure fails the run.
    Asserted,
    /// Reported only.
    Informational,
    /// Fits a constant; never asserted.
    Calibration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    Info,
}

impl Status {
    fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Info => "info",
        }
    }
}

/// `lhs ≤ rhs` style comparison; `margin = rhs − lhs`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub id: String,
    pub name: String,
    pub tier: Tier,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub status: Status,
    /// Ids of the bound reports and distance estimates behind the check.
    pub references: Vec<String>,
    pub note: String,
}

/// Which inequality is checked in which tier.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TierNote {
    pub claim: String,
    pub tier: Tier,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Labeled<T> {
    pub id: String,
    pub value: T,
}

/// A CSV table written as `<name>.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }
}

/// Shorthand for a CSV cell.
pub fn cell<T: std::fmt::Display>(v: T) -> String {
    v.to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Phase {
    pub name: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    pub scenario: String,
    pub seed: u64,
    pub timestamp: String,
    pub config: ExperimentConfig,
    pub tiers: Vec<TierNote>,
    pub checks: Vec<CheckRecord>,
    pub bounds: Vec<Labeled<BoundReport>>,
    pub distances: Vec<Labeled<DistanceEstimate>>,
    pub tables: Vec<Table>,
    pub phases: Vec<Phase>,
    pub warnings: Vec<String>,
}

impl RunReport {
    pub fn new(config: &ExperimentConfig) -> Self {
        Self {
            tool: "polydist".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            scenario: config.scenario.tag().into(),
            seed: config.seed,
            timestamp: chrono::Utc::now().to_rfc3339(),
            config: config.clone(),
            tiers: Vec::new(),
            checks: Vec::new(),
            bounds: Vec::new(),
            distances: Vec::new(),
            tables: Vec::new(),
            phases: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn tier(&mut self, claim: &str, tier: Tier) {
        self.tiers.push(TierNote {
            claim: claim.into(),
            tier,
        });
    }

    pub fn bound(&mut self, id: &str, b: BoundReport) -> String {
        self.bounds.push(Labeled {
            id: id.into(),
            value: b,
        });
        id.into()
    }

    pub fn distance(&mut self, id: &str, d: DistanceEstimate) -> String {
        if let Some(w) = &d.warning {
            self.warnings.push(format!("{id}: {w}"));
        }
        self.distances.push(Labeled {
            id: id.into(),
            value: d,
        });
        id.into()
    }

    /// Record `lhs ≤ rhs`; asserted checks pass or fail on it, the other
    /// tiers are marked informational.
    #[allow(clippy::too_many_arguments)]
    pub fn check(
        &mut self,
        id: &str,
        name: &str,
        tier: Tier,
        lhs: f64,
        rhs: f64,
        references: &[String],
        note: &str,
    ) -> bool {
        let holds = lhs <= rhs;
        let status = match tier {
            Tier::Asserted if holds => Status::Pass,
            Tier::Asserted => Status::Fail,
            _ => Status::Info,
        };
        self.checks.push(CheckRecord {
            id: id.into(),
            name: name.into(),
            tier,
            lhs,
            rhs,
            margin: rhs - lhs,
            status,
            references: references.to_vec(),
            note: note.into(),
        });
        holds
    }

    pub fn table(&mut self, t: Table) {
        self.tables.push(t);
    }

    pub fn phase(&mut self, name: &str, start: std::time::Instant) {
        self.phases.push(Phase {
            name: name.into(),
            seconds: start.elapsed().as_secs_f64(),
        });
    }

    pub fn asserted(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| c.tier == Tier::Asserted)
    }

    /// Whether every asserted check passed.
    pub fn passed(&self) -> bool {
        self.asserted().all(|c| c.status == Status::Pass)
    }

    pub fn failures(&self) -> Vec<&CheckRecord> {
        self.asserted().filter(|c| c.status == Status::Fail).collect()
    }

    pub fn find_check(&self, id: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.id == id)
    }

    pub fn find_table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn checks_csv(&self) -> String {
        let mut out = String::from("id,name,tier,lhs,rhs,margin,status\n");
        for c in &self.checks {
            let tier = match c.tier {
                Tier::Asserted => "asserted",
                Tier::Informational => "informational",
                Tier::Calibration => "calibration",
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                c.id,
                c.name,
                tier,
                c.lhs,
                c.rhs,
                c.margin,
                c.status.as_str()
            );
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Write `checks.csv`, one CSV per table, and in structured format
    /// `report.json`. Returns the written paths.
    pub fn write(&self, dir: &Path, format: OutputFormat) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut files = vec![(dir.join("checks.csv"), self.checks_csv())];
        for t in &self.tables {
            files.push((dir.join(format!("{}.csv", t.name)), t.to_csv()));
        }
        if format == OutputFormat::Structured {
            files.push((dir.join("report.json"), self.to_json()?));
        }
        for (path, text) in &files {
            std::fs::write(path, text)?;
        }
        Ok(files.into_iter().map(|f| f.0).collect())
    }

    /// One line per check, for terminals.
    pub fn summary(&self) -> String {
        let mut out = format!("scenario {} (seed {})\n", self.scenario, self.seed);
        for c in &self.checks {
            let _ = writeln!(
                out,
                "  [{}] {}: lhs={:.6} rhs={:.6} margin={:+.6}",
                c.status.as_str(),
                c.name,
                c.lhs,
                c.rhs,
                c.margin
            );
        }
        for w in &self.warnings {
            let _ = writeln!(out, "  warning: {w}");
        }
        let _ = writeln!(out, "  {}", if self.passed() { "PASS" } else { "FAIL" });
        out
    }
}
