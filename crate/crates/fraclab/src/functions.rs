//! Named preset functions and band-limited coefficient lists.

use std::f64::consts::PI;
use std::fmt;

use anyhow::{anyhow, bail, Result};
use fraclab_core::kato::KatoField;
use fraclab_core::manifold::{Manifold, ManifoldKind, Sphere};
use fraclab_core::SpectralField;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Flat-torus and circle terms are `[k, a]` for `a·cos(kx)` or
/// `[k1, k2, a]` for `a·cos(k1x + k2y)`, likewise for `sin`. Sphere terms are
/// `[l, m, a]` for `a·Y_l^m` in the real orthonormal basis.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coefficients {
    #[serde(default)]
    pub constant: f64,
    #[serde(default)]
    pub cos: Vec<Vec<f64>>,
    #[serde(default)]
    pub sin: Vec<Vec<f64>>,
    #[serde(default)]
    pub ylm: Vec<(usize, i64, f64)>,
}

/// A preset name, a number, or explicit coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FunctionSpec {
    Constant(f64),
    Preset(String),
    Coefficients(Coefficients),
}

pub const PRESETS: &[&str] = &["cos", "cos2", "sin2", "mixed", "bump", "positive-shift"];

impl fmt::Display for FunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionSpec::Constant(c) => write!(f, "{c}"),
            FunctionSpec::Preset(p) => f.write_str(p),
            FunctionSpec::Coefficients(c) => write!(f, "{}", toml::to_string(c).map_err(|_| fmt::Error)?.trim()),
        }
    }
}

impl FunctionSpec {
    pub fn preset(name: &str) -> Self {
        FunctionSpec::Preset(name.into())
    }

    /// Parses a command-line value: a number, a preset name, or an inline
    /// TOML table such as `{cos = [[1, 1.0], [3, 0.4]]}`.
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        if let Ok(c) = t.parse::<f64>() {
            return Ok(FunctionSpec::Constant(c));
        }
        if t.starts_with('{') {
            #[derive(Deserialize)]
            struct Wrap {
                f: Coefficients,
            }
            let w: Wrap =
                toml::from_str(&format!("f = {t}")).map_err(|e| anyhow!("bad coefficient table '{t}': {e}"))?;
            return Ok(FunctionSpec::Coefficients(w.f));
        }
        if !PRESETS.contains(&t) {
            bail!("unknown function preset '{t}' (expected a number, one of {PRESETS:?}, or an inline table)");
        }
        Ok(FunctionSpec::Preset(t.into()))
    }

    /// Coefficients of the function on `m`, truncated to its modes.
    pub fn build(&self, m: &Manifold) -> Result<SpectralField> {
        match self {
            FunctionSpec::Constant(c) => Ok(m.project(|_| *c)?),
            FunctionSpec::Coefficients(c) => coefficients(m, c),
            FunctionSpec::Preset(name) => preset(m, name),
        }
    }

    /// Field for the circle level-set code; the bump keeps its exact values.
    pub fn kato_field(&self, m: &Manifold) -> Result<KatoField> {
        if m.kind() != ManifoldKind::Circle {
            bail!("the level-set identity is only implemented on the circle");
        }
        if matches!(self, FunctionSpec::Preset(p) if p == "bump") {
            return Ok(KatoField::sampled(m, |x| bump((x - PI) / 2.0))?);
        }
        Ok(KatoField::band_limited(m, self.build(m)?)?)
    }
}

/// `exp(-1/(1-r²))` on `|r| < 1`, zero outside.
fn bump(r: f64) -> f64 {
    if r.abs() < 1.0 {
        (-1.0 / (1.0 - r * r)).exp()
    } else {
        0.0
    }
}

fn preset(m: &Manifold, name: &str) -> Result<SpectralField> {
    let c = |terms: &[(usize, i64, f64)]| Coefficients { ylm: terms.to_vec(), ..Default::default() };
    let flat = |cos: &[&[f64]], sin: &[&[f64]]| Coefficients {
        cos: cos.iter().map(|t| t.to_vec()).collect(),
        sin: sin.iter().map(|t| t.to_vec()).collect(),
        ..Default::default()
    };
    let spec = match (m.kind(), name) {
        (_, "bump") => {
            return Ok(match m.kind() {
                ManifoldKind::Circle => m.project(|p| bump((p[0] - PI) / 2.0))?,
                ManifoldKind::Torus => m.project(|p| bump((p[0] - PI) / 2.0) * bump((p[1] - PI) / 2.0))?,
                ManifoldKind::Sphere => m.project(|p| bump(p[0] / 1.2))?,
            })
        }
        (ManifoldKind::Sphere, "cos") => c(&[(1, 0, 1.0)]),
        (ManifoldKind::Sphere, "cos2") => c(&[(2, 0, 1.0)]),
        (ManifoldKind::Sphere, "sin2") => c(&[(2, -2, 1.0)]),
        (ManifoldKind::Sphere, "mixed") => c(&[(1, 0, 1.0), (2, 1, 0.5)]),
        (ManifoldKind::Sphere, "positive-shift") => Coefficients { constant: 2.0, ..c(&[(1, 0, 1.0)]) },
        (_, "cos") => flat(&[&[1.0, 1.0]], &[]),
        (_, "cos2") => flat(&[&[2.0, 1.0]], &[]),
        (ManifoldKind::Circle, "sin2") => flat(&[], &[&[2.0, 1.0]]),
        (ManifoldKind::Circle, "mixed") => flat(&[&[1.0, 1.0], &[3.0, 0.4]], &[]),
        (_, "sin2") => flat(&[], &[&[0.0, 2.0, 1.0]]),
        (_, "mixed") => flat(&[&[1.0, 1.0], &[1.0, 2.0, 0.4]], &[]),
        (_, "positive-shift") => Coefficients { constant: 2.0, ..flat(&[&[1.0, 1.0]], &[]) },
        _ => bail!("unknown function preset '{name}'"),
    };
    coefficients(m, &spec)
}

fn coefficients(m: &Manifold, c: &Coefficients) -> Result<SpectralField> {
    match m.kind() {
        ManifoldKind::Sphere => {
            if !c.cos.is_empty() || !c.sin.is_empty() {
                bail!("cos/sin terms are for flat manifolds; use ylm on the sphere");
            }
            // Y_0^0 = 1/√(4π)
            let mut out = m.zero_spectral();
            let lmax = m.modes();
            out.coeffs_mut()[0] = Complex64::new(c.constant * (4.0 * PI).sqrt(), 0.0);
            for &(l, mm, a) in &c.ylm {
                if l > lmax || mm.unsigned_abs() as usize > l {
                    bail!("Y_{l}^{mm} is outside degree {lmax}");
                }
                out.coeffs_mut()[Sphere::index(l, mm)] += a;
            }
            Ok(out)
        }
        kind => {
            if !c.ylm.is_empty() {
                bail!("ylm terms need the sphere");
            }
            let parse = |terms: &[Vec<f64>]| -> Result<Vec<(f64, f64, f64)>> {
                terms
                    .iter()
                    .map(|t| match t.as_slice() {
                        [k, a] => Ok((*k, 0.0, *a)),
                        [k1, k2, a] if kind == ManifoldKind::Torus => Ok((*k1, *k2, *a)),
                        _ => bail!(
                            "bad term {t:?}: expected [k, a]{}",
                            if kind == ManifoldKind::Torus { " or [k1, k2, a]" } else { "" }
                        ),
                    })
                    .collect()
            };
            let (cos, sin) = (parse(&c.cos)?, parse(&c.sin)?);
            let band = cos.iter().chain(&sin).map(|t| t.0.abs().max(t.1.abs())).fold(0.0, f64::max);
            if band > m.modes() as f64 {
                bail!("wavenumber {band} exceeds the mode cutoff {}", m.modes());
            }
            let k = c.constant;
            Ok(m.project(move |p| {
                let ph = |t: &(f64, f64, f64)| t.0 * p[0] + t.1 * p[1];
                k + cos.iter().map(|t| t.2 * ph(t).cos()).sum::<f64>()
                    + sin.iter().map(|t| t.2 * ph(t).sin()).sum::<f64>()
            })?)
        }
    }
}
