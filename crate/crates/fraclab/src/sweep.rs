//! Convergence sweeps over modes, z-nodes and level-set mesh levels.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crate::config::{Config, Identity};
use crate::runner::{run_jobs, Job, RunRecord};

/// Residuals below this multiple of `max(1, ‖lhs‖∞)` count as converged.
pub const FLOOR: f64 = 1e-9;
/// Required residual reduction per z-node doubling.
pub const Z_REDUCTION: f64 = 10.0;
/// Required fitted order in the mesh level.
pub const MESH_ORDER: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Modes,
    ZNodes,
    MeshLevel,
}

/// Residuals of one identity along one axis, the others held fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub identity: String,
    pub s: f64,
    pub axis: Axis,
    /// Values of the fixed axes, for instance `modes=32`.
    pub fixed: String,
    pub values: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Least-squares slope of `ln residual` against `ln value`, or against
    /// the level for mesh levels, where it is reported as `-log2` per level.
    pub slope: f64,
    /// `r_k / r_{k+1}` for z-nodes and modes, `log2(r_k / r_{k+1})` for levels.
    pub steps: Vec<f64>,
    pub floor: f64,
    /// Along z-nodes, whether every step meets [`Z_REDUCTION`] or lands below
    /// `floor`; along mesh levels, whether the fitted order reaches
    /// [`MESH_ORDER`] or the whole series sits below `floor`. `None` along
    /// the modes axis, which has no target.
    pub meets_target: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub config: Config,
    pub runs: Vec<RunRecord>,
    pub series: Vec<Series>,
}

/// Jobs over the full grid. Kato varies the mesh level and ignores z-nodes;
/// every other identity does the opposite.
pub fn sweep_jobs(cfg: &Config) -> Vec<Job> {
    let r = &cfg.run;
    let sw = &cfg.sweep;
    let or = |v: &Vec<usize>, d: usize| if v.is_empty() { vec![d] } else { v.clone() };
    let modes = or(&sw.modes, r.modes);
    let levels = or(&sw.mesh_levels, r.mesh_level);
    let z: Vec<Option<usize>> =
        if sw.z_nodes.is_empty() { vec![r.z_nodes] } else { sw.z_nodes.iter().map(|&n| Some(n)).collect() };
    let mut out = Vec::new();
    for &identity in &r.identities {
        for &s in &r.s {
            for &n in &modes {
                if identity == Identity::Kato {
                    for &l in &levels {
                        out.push(Job { identity, s, modes: n, z_nodes: None, mesh_level: l });
                    }
                } else {
                    for &zn in &z {
                        out.push(Job { identity, s, modes: n, z_nodes: zn, mesh_level: r.mesh_level });
                    }
                }
            }
        }
    }
    out
}

pub fn run_sweep(cfg: &Config) -> Result<SweepReport> {
    let jobs = sweep_jobs(cfg);
    let runs = run_jobs(cfg, &jobs)?;
    let series = build_series(&jobs, &runs);
    Ok(SweepReport { config: cfg.clone(), runs, series })
}

fn fit(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Groups runs by identity, s and the fixed axes. Multi-report jobs such as
/// `cordoba` are grouped per sub-identity name.
pub fn build_series(jobs: &[Job], runs: &[RunRecord]) -> Vec<Series> {
    // run ids start with the job index
    let job_of = |r: &RunRecord| -> Option<&Job> { r.run_id.get(..4)?.parse::<usize>().ok().and_then(|i| jobs.get(i)) };
    // (identity, s bits, axis, fixed) -> (value, residual, scale)
    type Key = (String, u64, Axis, String);
    let mut groups: BTreeMap<Key, Vec<(f64, f64, f64)>> = BTreeMap::new();
    for r in runs {
        let Some(j) = job_of(r) else { continue };
        if r.error.is_some() {
            continue;
        }
        let scale = r.lhs_sup.max(1.0);
        let key = |axis, fixed: String| (r.identity.clone(), r.s.to_bits(), axis, fixed);
        let zs = j.z_nodes.map_or("auto".to_string(), |z| z.to_string());
        groups.entry(key(Axis::Modes, format!("z_nodes={zs} level={}", j.mesh_level))).or_default().push((
            j.modes as f64,
            r.residual_sup,
            scale,
        ));
        if j.identity == Identity::Kato {
            groups.entry(key(Axis::MeshLevel, format!("modes={}", j.modes))).or_default().push((
                j.mesh_level as f64,
                r.residual_sup,
                scale,
            ));
        } else if let Some(z) = j.z_nodes {
            groups.entry(key(Axis::ZNodes, format!("modes={}", j.modes))).or_default().push((
                z as f64,
                r.residual_sup,
                scale,
            ));
        }
    }
    let mut out = Vec::new();
    for ((identity, s, axis, fixed), mut pts) in groups {
        if pts.len() < 2 {
            continue;
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let values: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let residuals: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let floor = FLOOR * pts.iter().map(|p| p.2).fold(1.0, f64::max);
        let logr: Vec<f64> = residuals.iter().map(|r| r.max(f64::MIN_POSITIVE).ln()).collect();
        let (slope, steps, meets_target) = match axis {
            Axis::MeshLevel => {
                let steps: Vec<f64> = residuals.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
                let slope = -fit(&values, &logr) / std::f64::consts::LN_2;
                let ok = slope >= MESH_ORDER || residuals.iter().all(|r| *r <= floor);
                (slope, steps, Some(ok))
            }
            Axis::ZNodes | Axis::Modes => {
                let lx: Vec<f64> = values.iter().map(|v| v.ln()).collect();
                let steps: Vec<f64> = residuals.windows(2).map(|w| w[0] / w[1]).collect();
                let ok = (axis == Axis::ZNodes)
                    .then(|| steps.iter().zip(&residuals[1..]).all(|(q, r)| *q >= Z_REDUCTION || *r <= floor));
                (fit(&lx, &logr), steps, ok)
            }
        };
        out.push(Series {
            identity,
            s: f64::from_bits(s),
            axis,
            fixed,
            values,
            residuals,
            slope,
            steps,
            floor,
            meets_target,
        });
    }
    out
}

impl SweepReport {
    /// Writes `sweep.json` and `sweep.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        let json = dir.join("sweep.json");
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(&json, text)?;
        let csv_path = dir.join("sweep.csv");
        let mut w = csv::Writer::from_path(&csv_path)?;
        w.write_record(["identity", "s", "modes", "z_nodes", "mesh_level", "residual_sup", "threshold", "pass"])?;
        for r in &self.runs {
            w.write_record([
                r.identity.clone(),
                r.s.to_string(),
                r.modes.to_string(),
                r.z_nodes.to_string(),
                r.mesh_level.map_or(String::new(), |l| l.to_string()),
                format!("{:e}", r.residual_sup),
                format!("{:e}", r.threshold),
                r.pass.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(vec![json, csv_path])
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        for s in &self.series {
            let target = match s.meets_target {
                Some(true) => "ok",
                Some(false) => "MISSED",
                None => "-",
            };
            out += &format!(
                "{:<24} s={:<5} {:<10} {:<22} slope={:>7.3} target={target}\n",
                s.identity,
                s.s,
                format!("{:?}", s.axis),
                s.fixed,
                s.slope
            );
            for (v, r) in s.values.iter().zip(&s.residuals) {
                out += &format!("    {v:>8}  {r:.3e}\n");
            }
        }
        out
    }
}
