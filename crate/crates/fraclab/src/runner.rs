//! Executes verification jobs and turns core reports into serializable records.

use std::time::Instant;

use anyhow::{bail, Result};
use fraclab_core::duhamel::duhamel_mode_check;
use fraclab_core::kato::{verify_kato, KatoMesh};
use fraclab_core::operators::{
    extension_oracle_heat, frac_laplacian, poisson_spectral, singular_integral_oracle_circle,
};
use fraclab_core::verify::{
    default_tolerance, dirichlet_rate, log_grid, rules_for, rules_with_nodes, verify_bochner, verify_cordoba,
    verify_decay, verify_gamma2, verify_leibniz, verify_sv, weighted_l1_norms, BochnerOptions, Nonlinearity, SvMode,
};
use fraclab_core::{Check, FracParams, IdentityReport, Manifold, ManifoldKind, SpectralField, ZRules};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Config, Identity};

/// Target accuracy of the z-rules when no node count is requested.
pub const RULE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub value: f64,
    /// `null` for informational values.
    pub threshold: Option<f64>,
    pub pass: bool,
}

impl From<&Check> for CheckRecord {
    fn from(c: &Check) -> Self {
        CheckRecord {
            name: c.name.clone(),
            value: c.value,
            threshold: c.threshold.is_finite().then_some(c.threshold),
            pass: c.pass,
        }
    }
}

/// Both sides on the grid, kept for `residuals.csv`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResidualField {
    pub nodes: Vec<[f64; 2]>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
}

/// One line of `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: String,
    pub identity: String,
    pub manifold: String,
    pub s: f64,
    pub modes: usize,
    pub z_nodes: usize,
    #[serde(deserialize_with = "nan_if_null")]
    pub residual_sup: f64,
    #[serde(deserialize_with = "nan_if_null")]
    pub residual_l2: f64,
    #[serde(deserialize_with = "nan_if_null")]
    pub lhs_mean: f64,
    #[serde(deserialize_with = "nan_if_null")]
    pub rhs_mean: f64,
    /// `‖lhs‖∞`, the scale of the relative tolerance.
    #[serde(deserialize_with = "nan_if_null")]
    pub lhs_sup: f64,
    #[serde(deserialize_with = "nan_if_null")]
    pub tail_error_estimate: f64,
    pub pass: bool,
    pub wall_time_ms: f64,
    #[serde(deserialize_with = "nan_if_null")]
    pub threshold: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh_level: Option<usize>,
    #[serde(default)]
    pub checks: Vec<CheckRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip)]
    pub field: Option<ResidualField>,
}

/// JSON has no NaN; `serde_json` writes it as `null`.
fn nan_if_null<'de, D: serde::Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

/// One point of the parameter grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Job {
    pub identity: Identity,
    pub s: f64,
    pub modes: usize,
    pub z_nodes: Option<usize>,
    pub mesh_level: usize,
}

impl Job {
    pub fn id(&self, index: usize, manifold: &str) -> String {
        let mut id = format!("{index:04}-{}-{manifold}-s{}-n{}", self.identity.name(), self.s, self.modes);
        if let Some(z) = self.z_nodes {
            id += &format!("-z{z}");
        }
        if self.identity == Identity::Kato {
            id += &format!("-l{}", self.mesh_level);
        }
        id
    }
}

/// The `[run]` grid: identities × s values at the configured resolution.
pub fn jobs(cfg: &Config) -> Vec<Job> {
    let r = &cfg.run;
    let mut out = Vec::new();
    for &identity in &r.identities {
        for &s in &r.s {
            out.push(Job { identity, s, modes: r.modes, z_nodes: r.z_nodes, mesh_level: r.mesh_level });
        }
    }
    out
}

/// Worker count from `FRACLAB_THREADS`, falling back to the machine's parallelism.
pub fn thread_count() -> usize {
    std::env::var("FRACLAB_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// Runs every job on a bounded pool. Records come back in job order, and
/// each job is computed sequentially, so the output does not depend on the
/// number of workers.
pub fn run_jobs(cfg: &Config, jobs: &[Job]) -> Result<Vec<RunRecord>> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(thread_count()).build()?;
    let manifold = cfg.run.manifold.clone();
    let nested: Vec<Vec<RunRecord>> =
        pool.install(|| jobs.par_iter().enumerate().map(|(i, job)| run_job(cfg, job, &job.id(i, &manifold))).collect());
    Ok(nested.into_iter().flatten().collect())
}

/// Runs one job. Computation errors become failing records rather than
/// aborting the whole run.
pub fn run_job(cfg: &Config, job: &Job, run_id: &str) -> Vec<RunRecord> {
    let start = Instant::now();
    let outcome = compute(cfg, job);
    let ms = if cfg.run.deterministic { 0.0 } else { start.elapsed().as_secs_f64() * 1e3 };
    match outcome {
        Ok(reports) => {
            let n = reports.len();
            reports
                .into_iter()
                .enumerate()
                .map(|(k, (name, r))| {
                    let id = if n > 1 { format!("{run_id}-{k}") } else { run_id.to_string() };
                    record(&id, &name, job, &r, ms / n as f64, cfg.run.residuals_csv)
                })
                .collect()
        }
        Err(e) => vec![RunRecord {
            run_id: run_id.to_string(),
            identity: job.identity.name().into(),
            manifold: cfg.run.manifold.clone(),
            s: job.s,
            modes: job.modes,
            z_nodes: job.z_nodes.unwrap_or(0),
            residual_sup: f64::NAN,
            residual_l2: f64::NAN,
            lhs_mean: f64::NAN,
            rhs_mean: f64::NAN,
            lhs_sup: f64::NAN,
            tail_error_estimate: f64::NAN,
            pass: false,
            wall_time_ms: ms,
            threshold: f64::NAN,
            mesh_level: (job.identity == Identity::Kato).then_some(job.mesh_level),
            checks: Vec::new(),
            error: Some(format!("{e:#}")),
            field: None,
        }],
    }
}

fn record(run_id: &str, name: &str, job: &Job, r: &IdentityReport, ms: f64, keep_field: bool) -> RunRecord {
    let field = keep_field
        .then(|| Manifold::new(r.manifold, r.modes).ok())
        .flatten()
        .filter(|m| r.lhs.len() > 1 && m.num_nodes() == r.lhs.len())
        .map(|m| ResidualField {
            nodes: (0..m.num_nodes()).map(|i| m.node(i)).collect(),
            lhs: r.lhs.values().to_vec(),
            rhs: r.rhs.values().to_vec(),
        });
    RunRecord {
        run_id: run_id.into(),
        identity: name.into(),
        manifold: r.manifold.name().into(),
        s: r.s,
        modes: r.modes,
        z_nodes: r.z_nodes,
        residual_sup: r.residual_sup,
        residual_l2: r.residual_l2,
        lhs_mean: r.lhs_mean,
        rhs_mean: r.rhs_mean,
        lhs_sup: r.lhs.max_abs(),
        tail_error_estimate: r.tail_error_estimate,
        pass: r.pass(),
        wall_time_ms: ms,
        threshold: r.threshold,
        mesh_level: (job.identity == Identity::Kato).then_some(job.mesh_level),
        checks: r.checks.iter().map(CheckRecord::from).collect(),
        error: None,
        field,
    }
}

/// z-rules for the job, truncated at [`RULE_TOL`]. A node count fixes the
/// panel order; otherwise it is picked from the tolerance.
pub fn job_rules(m: &Manifold, p: &FracParams, fields: &[&SpectralField], z_nodes: Option<usize>) -> Result<ZRules> {
    Ok(match z_nodes {
        Some(n) => rules_with_nodes(m, p, fields, RULE_TOL, n)?,
        None => rules_for(m, p, fields, RULE_TOL)?,
    })
}

fn nonlinearity(name: &str) -> Result<Nonlinearity> {
    Ok(match name {
        "t2" => Nonlinearity::power(2),
        "t4" => Nonlinearity::power(4),
        "cosh" => Nonlinearity::cosh(),
        other => bail!("unknown nonlinearity '{other}'"),
    })
}

type Named = (String, IdentityReport);

fn compute(cfg: &Config, job: &Job) -> Result<Vec<Named>> {
    let kind = cfg.manifold_kind()?;
    let m = Manifold::new(kind, job.modes)?;
    let p = FracParams::new(job.s)?;
    let name = job.identity.name();
    let tol = cfg.run.tol.unwrap_or_else(|| default_tolerance(kind, name));
    let f = &cfg.functions;
    let one = |r: IdentityReport| Ok(vec![(name.to_string(), r)]);
    match job.identity {
        Identity::Leibniz => {
            let u = f.u.build(&m)?;
            let v = f.v.as_ref().unwrap_or(&f.u).build(&m)?;
            let rules = job_rules(&m, &p, &[&u, &v], job.z_nodes)?;
            one(verify_leibniz(&m, &u, &v, &p, &rules, tol)?)
        }
        Identity::Bochner => {
            let u = f.u.build(&m)?;
            let rules = job_rules(&m, &p, &[&u], job.z_nodes)?;
            one(verify_bochner(&m, &u, &p, &rules, tol, BochnerOptions::default())?)
        }
        Identity::Gamma2 => {
            let u = f.u.build(&m)?;
            let rules = job_rules(&m, &p, &[&u], job.z_nodes)?;
            one(verify_gamma2(&m, &u, &p, &rules, tol)?)
        }
        Identity::Cordoba => {
            let u = f.u.build(&m)?;
            let rules = job_rules(&m, &p, &[&u], job.z_nodes)?;
            cfg.run
                .cordoba_phi
                .iter()
                .map(|ph| Ok((format!("cordoba[{ph}]"), verify_cordoba(&m, &u, &nonlinearity(ph)?, &p, &rules, tol)?)))
                .collect()
        }
        Identity::Sv => {
            let u = f.u.build(&m)?;
            let rules = job_rules(&m, &p, &[&u], job.z_nodes)?;
            cfg.run
                .sv_q
                .iter()
                .map(|&q| Ok((format!("sv[q={q}]"), verify_sv(&m, &u, q, &p, &rules, tol, SvMode::Auto)?)))
                .collect()
        }
        Identity::Kato => {
            let u = f.u.kato_field(&m)?;
            let phi = f.phi.build(&m)?;
            let mesh = KatoMesh::level(&p, job.mesh_level)?;
            let mut r = verify_kato(&u, &phi, &p, &mesh)?;
            if let Some(t) = cfg.run.tol {
                r.tolerance = t;
                r.threshold = t * r.lhs_mean.abs().max(1.0);
            }
            one(r)
        }
        Identity::DuhamelMode => duhamel_modes(&p, cfg.run.tol),
        Identity::Decay => decay(cfg, &m, &p, job),
        Identity::Oracles => oracles(&m, &p, cfg, job),
    }
}

fn scalar_kind() -> ManifoldKind {
    ManifoldKind::Circle
}

fn duhamel_modes(p: &FracParams, tol: Option<f64>) -> Result<Vec<Named>> {
    let mut out = Vec::new();
    let e = |z: f64| (-z).exp();
    // g'(0) ≠ 0 leaves the flux at 0 infinite when s > 1/2
    if p.s() <= 0.5 {
        let c = duhamel_mode_check(|z| z * e(z), |z| (1.0 - z) * e(z), |z| (z - 2.0) * e(z), 1.0, p)?;
        let r = IdentityReport::scalar("duhamel-mode", scalar_kind(), p.s(), 1, c.lhs, c.rhs, tol.unwrap_or(1e-9))
            .with_check(Check::info("quad_error", c.quad_error));
        out.push(("duhamel-mode[z e^-z, λ=1]".to_string(), r));
    }
    let c =
        duhamel_mode_check(|z| z * z * e(z), |z| (2.0 * z - z * z) * e(z), |z| (2.0 - 4.0 * z + z * z) * e(z), 4.0, p)?;
    let r = IdentityReport::scalar("duhamel-mode", scalar_kind(), p.s(), 2, c.lhs, c.rhs, tol.unwrap_or(1e-7))
        .with_check(Check::info("quad_error", c.quad_error));
    out.push(("duhamel-mode[z² e^-z, λ=4]".to_string(), r));
    Ok(out)
}

fn decay(cfg: &Config, m: &Manifold, p: &FracParams, job: &Job) -> Result<Vec<Named>> {
    let f = &cfg.functions;
    let u = f.u.build(m)?;
    let v = f.v.as_ref().unwrap_or(&f.u).build(m)?;
    let s = p.s();
    let kind = m.kind();

    let d = verify_decay(m, &u, p, &log_grid(0.01, 20.0, 25))?;
    let mut r = IdentityReport::scalar("decay", kind, s, m.modes(), 0.0, 0.0, 0.0);
    for (k, pn) in ["1", "2", "inf"].iter().enumerate() {
        r = r.with_check(Check::at_most(&format!("sup_ratio_dz_p{pn}"), d.sup_dz[k], f64::MAX));
    }
    r = r.with_check(Check::at_most("sup_ratio_dz_grad", d.sup_dz_grad, f64::MAX)).with_check(Check::at_most(
        "sup_ratio_grad",
        d.sup_grad,
        1.0 + 1e-10,
    ));

    let fit = dirichlet_rate(m, &u, &v, p, &log_grid(1e-5, 1e-3, 9), 0.15)?;
    let mut rate = IdentityReport::scalar("dirichlet-rate", kind, s, m.modes(), fit.slope, fit.predicted, 0.15);
    rate.threshold = 0.15 * fit.predicted;

    let rules = job_rules(m, p, &[&u], job.z_nodes)?;
    let [h, g] = weighted_l1_norms(m, &u, p, &rules)?;
    let mut l1 = IdentityReport::scalar("weighted-l1", kind, s, m.modes(), 0.0, 0.0, 0.0)
        .with_check(Check::at_most("hessian", h, f64::MAX))
        .with_check(Check::at_most("grad_dz", g, f64::MAX));
    l1.z_nodes = rules.horizontal.len();
    Ok(vec![("decay".into(), r), ("dirichlet-rate".into(), rate), ("weighted-l1".into(), l1)])
}

fn oracles(m: &Manifold, p: &FracParams, cfg: &Config, job: &Job) -> Result<Vec<Named>> {
    let u = cfg.functions.u.build(m)?;
    let s = p.s();
    let mut out = Vec::new();
    for z in [0.1, 1.0, 5.0] {
        let (heat, err) = extension_oracle_heat(m, &u, p, z)?;
        let spectral = m.synthesize(&poisson_spectral(m, &u, p, z)?)?;
        let mut r = IdentityReport::compare("oracle-heat", m, s, 0, heat, spectral, cfg.run.tol.unwrap_or(1e-8))?;
        r.tail_error_estimate = err;
        out.push((format!("oracle-heat[z={z}]"), r));
    }
    if m.kind() == ManifoldKind::Circle {
        // calibrate on cos x at x = 0, then predict (-Δ)^s u
        let cosx = m.project(|x| x[0].cos())?;
        let constant = singular_integral_oracle_circle(m, &cosx, s)?.0.values()[0];
        let (raw, err) = singular_integral_oracle_circle(m, &u, s)?;
        let spectral = m.synthesize(&frac_laplacian(m, &u, s)?)?.scaled(-1.0);
        let mut r = IdentityReport::compare(
            "oracle-singular",
            m,
            s,
            0,
            raw.scaled(1.0 / constant),
            spectral,
            cfg.run.tol.unwrap_or(1e-5),
        )?;
        r.tail_error_estimate = err / constant;
        out.push(("oracle-singular".into(), r.with_check(Check::info("constant", constant))));
    }
    if (s - 0.5).abs() < 1e-15 {
        let worst = (0..=400).map(|i| i as f64 * 0.05).map(|r| (p.theta(r) - (-r).exp()).abs()).fold(0.0, f64::max);
        let r = IdentityReport::scalar("theta-half", m.kind(), s, job.modes, worst, 0.0, cfg.run.tol.unwrap_or(1e-11));
        out.push(("theta-half".into(), r));
    }
    Ok(out)
}
