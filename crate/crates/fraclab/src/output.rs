//! `report.json` and `residuals.csv`.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::runner::RunRecord;

pub const REPORT_FILE: &str = "report.json";
pub const RESIDUALS_FILE: &str = "residuals.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub pass: bool,
    pub config: Config,
    pub runs: Vec<RunRecord>,
}

impl Report {
    pub fn new(config: Config, runs: Vec<RunRecord>) -> Self {
        Report { pass: runs.iter().all(|r| r.pass), config, runs }
    }

    pub fn failures(&self) -> impl Iterator<Item = &RunRecord> {
        self.runs.iter().filter(|r| !r.pass)
    }

    pub fn read(dir: &Path) -> Result<Report> {
        let path = dir.join(REPORT_FILE);
        let text = fs::read_to_string(&path).with_context(|| format!("cannot read {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("malformed {}", path.display()))
    }

    /// Writes `report.json` and, when any run kept its residual field,
    /// `residuals.csv`. Returns the paths written.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        let path = dir.join(REPORT_FILE);
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
        let mut written = vec![path];
        if self.runs.iter().any(|r| r.field.is_some()) {
            let path = dir.join(RESIDUALS_FILE);
            write_residuals(&path, &self.runs)?;
            written.push(path);
        }
        Ok(written)
    }
}

/// One row per grid node of every kept residual field.
pub fn write_residuals(path: &Path, runs: &[RunRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record(["run_id", "identity", "s", "node", "x1", "x2", "lhs", "rhs", "residual"])?;
    for r in runs {
        let Some(f) = &r.field else { continue };
        for i in 0..f.lhs.len() {
            let x = f.nodes.get(i).copied().unwrap_or([f64::NAN; 2]);
            w.write_record([
                r.run_id.clone(),
                r.identity.clone(),
                r.s.to_string(),
                i.to_string(),
                x[0].to_string(),
                x[1].to_string(),
                format!("{:e}", f.lhs[i]),
                format!("{:e}", f.rhs[i]),
                format!("{:e}", f.lhs[i] - f.rhs[i]),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Fixed-width summary, one line per run.
pub fn summary(runs: &[RunRecord]) -> String {
    let mut out = String::new();
    for r in runs {
        let status = if r.pass { "PASS" } else { "FAIL" };
        out += &format!(
            "{status}  {:<28} {:<7} s={:<5} N={:<4} residual_sup={:.3e} threshold={:.3e}",
            r.identity, r.manifold, r.s, r.modes, r.residual_sup, r.threshold
        );
        for c in r.checks.iter().filter(|c| !c.pass) {
            out += &format!("  [{} = {:.3e} fails {:.3e}]", c.name, c.value, c.threshold.unwrap_or(f64::NAN));
        }
        if let Some(e) = &r.error {
            out += &format!("  error: {e}");
        }
        out.push('\n');
    }
    out
}
