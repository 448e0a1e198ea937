//! Merging reports into a CSV table and an overall summary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::SCHEMA_VERSION;
use super::experiment::{ExperimentReport, Status, Timing};
use crate::error::{LabError, Result};

pub const CSV_COLUMNS: [&str; 8] = ["config_id", "N", "A_N", "ks_t1", "ks_t05", "corr_incr", "var_ratio", "surrogate_gap"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub overall: Status,
    pub configs: Vec<ConfigStatus>,
    /// `"config_id: verdict"` for every failing verdict.
    pub failing: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigStatus {
    pub config_id: String,
    pub region: String,
    pub status: Status,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6e}")).unwrap_or_default()
}

/// One CSV row per (config, N).
pub fn table_csv(reports: &[ExperimentReport]) -> String {
    let mut s = CSV_COLUMNS.join(",");
    s.push('\n');
    for r in reports {
        for row in &r.rows {
            let _ = writeln!(
                s,
                "{},{},{:.6e},{:.6e},{:.6e},{:.6e},{},{}",
                r.config_id,
                row.n,
                row.a_n,
                row.ks_t1,
                row.ks_t05,
                row.corr_incr,
                opt(row.var_ratio),
                opt(row.surrogate_gap)
            );
        }
    }
    s
}

/// Overall status: any FAIL wins, then PASS; all out-of-scope gives OUT_OF_SCOPE.
pub fn convergence_report(reports: &[ExperimentReport]) -> Result<(Summary, String)> {
    if reports.is_empty() {
        return Err(LabError::domain("convergence_report needs at least one report"));
    }
    if let Some(r) = reports.iter().find(|r| r.schema_version != SCHEMA_VERSION) {
        return Err(LabError::Format(format!(
            "report '{}' has schema_version {}, expected {SCHEMA_VERSION}",
            r.config_id, r.schema_version
        )));
    }
    let failing: Vec<String> = reports
        .iter()
        .flat_map(|r| r.failing().into_iter().map(move |v| format!("{}: {}", r.config_id, v.name)))
        .collect();
    let overall = if reports.iter().any(|r| r.overall == Status::Fail) {
        Status::Fail
    } else if reports.iter().any(|r| r.overall == Status::Pass) {
        Status::Pass
    } else {
        Status::OutOfScope
    };
    let configs = reports
        .iter()
        .map(|r| ConfigStatus { config_id: r.config_id.clone(), region: r.region.label().into(), status: r.overall })
        .collect();
    Ok((Summary { schema_version: SCHEMA_VERSION, overall, configs, failing }, table_csv(reports)))
}

/// Writes `report.json`, `table.csv` and, when given, `timing.json` into `dir`.
pub fn write_outputs(dir: &Path, report: &ExperimentReport, timing: Option<&Timing>) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut out = vec![dir.join("report.json"), dir.join("table.csv")];
    std::fs::write(&out[0], report.to_json()?)?;
    std::fs::write(&out[1], table_csv(std::slice::from_ref(report)))?;
    if let Some(t) = timing {
        let p = dir.join("timing.json");
        std::fs::write(&p, serde_json::to_string_pretty(t)?)?;
        out.push(p);
    }
    Ok(out)
}

/// Writes `summary.json` and `table.csv` for merged reports.
pub fn write_summary(dir: &Path, summary: &Summary, csv: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(summary)?)?;
    std::fs::write(dir.join("table.csv"), csv)?;
    Ok(())
}

pub fn load_report(path: &Path) -> Result<ExperimentReport> {
    ExperimentReport::from_json(&std::fs::read_to_string(path)?)
}
