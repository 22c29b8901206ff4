//! Run configuration, read from TOML and overridden by command-line flags.

use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use fraclab_core::ManifoldKind;
use serde::{Deserialize, Serialize};

use crate::functions::FunctionSpec;

/// Identities and properties the runner knows how to check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Identity {
    Leibniz,
    Bochner,
    Gamma2,
    Cordoba,
    Sv,
    Kato,
    DuhamelMode,
    Decay,
    Oracles,
}

impl Identity {
    pub const ALL: [Identity; 9] = [
        Identity::Leibniz,
        Identity::Bochner,
        Identity::Gamma2,
        Identity::Cordoba,
        Identity::Sv,
        Identity::Kato,
        Identity::DuhamelMode,
        Identity::Decay,
        Identity::Oracles,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Identity::Leibniz => "leibniz",
            Identity::Bochner => "bochner",
            Identity::Gamma2 => "gamma2",
            Identity::Cordoba => "cordoba",
            Identity::Sv => "sv",
            Identity::Kato => "kato",
            Identity::DuhamelMode => "duhamel-mode",
            Identity::Decay => "decay",
            Identity::Oracles => "oracles",
        }
    }
}

impl FromStr for Identity {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Identity::ALL.into_iter().find(|i| i.name() == s).with_context(|| format!("unknown identity '{s}'"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub identities: Vec<Identity>,
    pub manifold: String,
    pub s: Vec<f64>,
    /// Mode cutoff: `|k| ≤ modes` on flat manifolds, degree on the sphere.
    pub modes: usize,
    /// Approximate size of the horizontal z-rule; `None` picks the order
    /// from the quadrature tolerance alone.
    pub z_nodes: Option<usize>,
    /// Relative sup tolerance; `None` uses the per-identity default.
    pub tol: Option<f64>,
    /// Zeroes wall times in the report so that repeated runs are byte-identical.
    pub deterministic: bool,
    /// Refinement level of the level-set mesh.
    pub mesh_level: usize,
    /// Nonlinearities for the Córdoba-Córdoba check: `t2`, `t4`, `cosh`.
    pub cordoba_phi: Vec<String>,
    pub sv_q: Vec<f64>,
    /// Write the residual field of every run to `residuals.csv`.
    pub residuals_csv: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            identities: Vec::new(),
            manifold: "circle".into(),
            s: vec![0.5],
            modes: 32,
            z_nodes: None,
            tol: None,
            deterministic: true,
            mesh_level: 1,
            cordoba_phi: vec!["t4".into(), "cosh".into()],
            sv_q: vec![2.0, 3.0, 4.0],
            residuals_csv: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FunctionsConfig {
    pub u: FunctionSpec,
    /// Second argument of the bilinear identities; defaults to `u`.
    pub v: Option<FunctionSpec>,
    pub phi: FunctionSpec,
}

impl Default for FunctionsConfig {
    fn default() -> Self {
        FunctionsConfig { u: FunctionSpec::preset("cos"), v: None, phi: FunctionSpec::Constant(1.0) }
    }
}

/// Parameter grids for `sweep`. An empty list keeps the `[run]` value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub modes: Vec<usize>,
    pub z_nodes: Vec<usize>,
    pub mesh_levels: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub run: RunConfig,
    pub functions: FunctionsConfig,
    pub sweep: SweepConfig,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Config> {
        let c: Config = toml::from_str(text).context("invalid configuration")?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        Config::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn manifold_kind(&self) -> Result<ManifoldKind> {
        Ok(self.run.manifold.parse::<ManifoldKind>()?)
    }

    pub fn validate(&self) -> Result<()> {
        let r = &self.run;
        self.manifold_kind()?;
        if r.s.is_empty() {
            bail!("run.s is empty");
        }
        if let Some(s) = r.s.iter().find(|s| !(**s > 0.0 && **s < 1.0)) {
            bail!("fractional order {s} is outside (0, 1)");
        }
        if r.modes == 0 {
            bail!("run.modes must be positive");
        }
        if let Some(t) = r.tol {
            if !(t > 0.0 && t < 1.0) {
                bail!("tolerance {t} is outside (0, 1)");
            }
        }
        if let Some(n) = r.z_nodes {
            if n < 8 {
                bail!("z_nodes = {n} is below 8");
            }
        }
        for p in &r.cordoba_phi {
            if !["t2", "t4", "cosh"].contains(&p.as_str()) {
                bail!("unknown Córdoba nonlinearity '{p}' (t2, t4, cosh)");
            }
        }
        if let Some(q) = r.sv_q.iter().find(|q| q.is_nan() || **q <= 1.0) {
            bail!("Stroock-Varopoulos exponent {q} must exceed 1");
        }
        Ok(())
    }
}
