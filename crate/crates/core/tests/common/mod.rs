#![allow(dead_code)]

use fraclab_core::manifold::{GridField, Manifold, ManifoldKind, SpectralField};
use num_complex::Complex64;

/// Real field supported on modes with `|k| ≤ band` (degree `≤ band` on the
/// sphere), built from raw numbers.
pub fn random_field(m: &Manifold, band: usize, raw: &[f64]) -> SpectralField {
    let lim = match m.kind() {
        ManifoldKind::Sphere => (band * band + band) as f64,
        _ => (band * band) as f64,
    } + 1e-9;
    let mut it = raw.iter().cycle();
    let coeffs = m
        .eigenvalues()
        .iter()
        .map(|&lam| {
            if lam <= lim {
                Complex64::new(*it.next().unwrap(), *it.next().unwrap())
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    // synthesis keeps the real part, analysis makes the layout consistent
    m.analyze(&m.synthesize(&SpectralField::new(coeffs)).unwrap()).unwrap()
}

pub fn max_diff(a: &GridField, b: &GridField) -> f64 {
    a.sub(b).unwrap().max_abs()
}

/// `Σ c_k cos(kx) + d_k sin(kx)` on the circle.
pub fn trig(m: &Manifold, cos: &[(f64, f64)], sin: &[(f64, f64)]) -> SpectralField {
    let cos = cos.to_vec();
    let sin = sin.to_vec();
    m.project(move |p| {
        cos.iter().map(|&(k, c)| c * (k * p[0]).cos()).sum::<f64>()
            + sin.iter().map(|&(k, c)| c * (k * p[0]).sin()).sum::<f64>()
    })
    .unwrap()
}
