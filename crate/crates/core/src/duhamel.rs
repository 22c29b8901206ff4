//! Duhamel-type right-hand sides `∫₀^∞ P_z F(·, z) dz` and the scalar
//! per-mode check of the underlying flux identity.

use crate::error::{Error, Result};
use crate::manifold::{GridField, Manifold, SpectralField};
use crate::operators::poisson_spectral;
use crate::quad::{adaptive, adaptive_semi_infinite, gauss_jacobi_left};
use crate::special::FracParams;
use crate::zquad::{WeightClass, ZRule, ZRules};

/// How the forcing is normalised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RhsForm {
    /// `β_s ∫₀^∞ P_z G(·, z) z^{1-2s} dz`; the forcing returns `G`.
    Theorem,
    /// `∫₀^∞ P_z F(·, z) dz`; the forcing returns `F`.
    Plain,
}

/// `Σ_i w_i P_{z_i} G(·, z_i)` over one rule, accumulated in coefficient space.
fn accumulate(
    m: &Manifold,
    p: &FracParams,
    rule: &ZRule,
    form: RhsForm,
    class: WeightClass,
    forcing: &mut impl FnMut(f64, WeightClass) -> Result<Option<SpectralField>>,
    acc: &mut SpectralField,
) -> Result<bool> {
    let mut any = false;
    for (&z, &w) in rule.nodes().iter().zip(rule.weights()) {
        let Some(g) = forcing(z, class)? else { continue };
        any = true;
        let w = match form {
            RhsForm::Theorem => w,
            RhsForm::Plain => w * libm::pow(z, 2.0 * p.s() - 1.0),
        };
        *acc = acc.axpy(w, &poisson_spectral(m, &g, p, z)?)?;
    }
    Ok(any)
}

/// Split assembly: the forcing is asked for its horizontal and its vertical
/// component at the nodes of the matching rule; `None` means the component
/// is absent. Returns coefficients on the layout of `m`.
///
/// The reduction runs in node order, so results are reproducible bit for bit.
pub fn assemble_rhs_split(
    m: &Manifold,
    p: &FracParams,
    rules: &ZRules,
    form: RhsForm,
    mut forcing: impl FnMut(f64, WeightClass) -> Result<Option<SpectralField>>,
) -> Result<SpectralField> {
    let mut acc = m.zero_spectral();
    for class in [WeightClass::Horizontal, WeightClass::Vertical] {
        accumulate(m, p, rules.get(class), form, class, &mut forcing, &mut acc)?;
    }
    Ok(match form {
        RhsForm::Theorem => acc.scaled(p.beta()),
        RhsForm::Plain => acc,
    })
}

/// Single-rule assembly for a forcing given as grid fields on `m`.
pub fn assemble_rhs(
    m: &Manifold,
    p: &FracParams,
    rule: &ZRule,
    form: RhsForm,
    mut forcing: impl FnMut(f64) -> Result<GridField>,
) -> Result<GridField> {
    let mut acc = m.zero_spectral();
    let class = rule.class();
    let mut f = |z: f64, _: WeightClass| -> Result<Option<SpectralField>> { Ok(Some(m.analyze(&forcing(z)?)?)) };
    accumulate(m, p, rule, form, class, &mut f, &mut acc)?;
    let acc = match form {
        RhsForm::Theorem => acc.scaled(p.beta()),
        RhsForm::Plain => acc,
    };
    m.synthesize(&acc)
}

/// Below this the integrand is taken as `z^{-2s}` times a smooth factor.
const HEAD: f64 = 1e-8;

/// Both sides of the single-mode flux identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    /// Error estimate of the adaptive quadrature for the right side.
    pub quad_error: f64,
}

/// Checks
/// `lim_{z→∞} z^{1-2s}g' - lim_{z→0} z^{1-2s}g' = ∫₀^∞ θ_s(z√λ) [(z^{1-2s}g')' - λz^{1-2s}g] dz`
/// for a scalar profile with `g(0) = 0`, given `g`, `g'` and `g''`.
///
/// For `s > 1/2` the boundary flux is only finite when `g'(0) = 0`; other
/// profiles are rejected. The right side is integrated by adaptive
/// Gauss-Kronrod, independently of the z-rules.
pub fn duhamel_mode_check(
    g: impl Fn(f64) -> f64,
    dg: impl Fn(f64) -> f64,
    d2g: impl Fn(f64) -> f64,
    lambda: f64,
    p: &FracParams,
) -> Result<ModeCheck> {
    if !(lambda >= 0.0) {
        return Err(Error::Domain { what: "eigenvalue", value: lambda });
    }
    let s = p.s();
    if g(0.0).abs() > 1e-14 {
        return Err(Error::InvalidInput(alloc::format!("profile does not vanish at 0: g(0) = {}", g(0.0))));
    }
    let far = 200.0;
    let flux = |z: f64| libm::pow(z, 1.0 - 2.0 * s) * dg(z);
    if flux(far).abs() > 1e-12 || g(far).abs() > 1e-12 {
        return Err(Error::InvalidInput("profile is not decaying".into()));
    }
    let d0 = dg(0.0);
    let flux0 = if s < 0.5 {
        0.0
    } else if s == 0.5 {
        d0
    } else if d0 == 0.0 {
        0.0
    } else {
        return Err(Error::InvalidInput(alloc::format!("boundary flux diverges for s = {s} with g'(0) = {d0}")));
    };
    let lhs = 0.0 - flux0;

    let sqrt_l = libm::sqrt(lambda);
    // integrand = z^{-2s} h(z)
    let h = |z: f64| p.theta(z * sqrt_l) * ((1.0 - 2.0 * s) * dg(z) + z * d2g(z) - lambda * z * g(z));
    let integrand = |z: f64| libm::pow(z, -2.0 * s) * h(z);
    // for s >= 1/2, h vanishes at 0 and one power of z moves into the weight
    let mut rhs = if s < 0.5 {
        gauss_jacobi_left(24, -2.0 * s, HEAD)?.integrate(h)
    } else {
        gauss_jacobi_left(24, 1.0 - 2.0 * s, HEAD)?.integrate(|z| h(z) / z)
    };
    let mut err = 0.0;
    let mut a = HEAD;
    while a < 1.0 {
        let b = (a * 10.0).min(1.0);
        let r = adaptive(integrand, a, b, 1e-15, 1e-13, 2000)?;
        rhs += r.value;
        err += r.error;
        a = b;
    }
    let tail = adaptive_semi_infinite(integrand, 1.0, 1e-13, 1e-13)?;
    rhs += tail.value;
    Ok(ModeCheck { lhs, rhs, residual: (lhs - rhs).abs(), quad_error: err + tail.error })
}
