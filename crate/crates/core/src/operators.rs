//! Fractional powers of `-Δ`, the Poisson semigroup `P_z`, extension slices and
//! two independent oracles for them.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{domain, Error, Result};
use crate::manifold::{GridField, Manifold, SpectralField};
use crate::quad::{gauss_jacobi_left, gauss_legendre, line_trapezoid};
use crate::special::{gamma, FracParams};
use crate::zquad::ZRules;

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma <= 1.0) {
        return Err(domain("fractional power", sigma));
    }
    Ok(())
}

fn check_height(z: f64) -> Result<()> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(domain("extension height", z));
    }
    Ok(())
}

/// Applies `m(λ)` once per distinct eigenvalue.
fn cached_multiplier(m: &Manifold, f: &SpectralField, mut mult: impl FnMut(f64) -> f64) -> Result<SpectralField> {
    let mut cache: BTreeMap<u64, f64> = BTreeMap::new();
    let mut value = |lam: f64| *cache.entry(lam.to_bits()).or_insert_with(|| mult(lam));
    let coeffs = f
        .coeffs()
        .iter()
        .zip(m.eigenvalues())
        .map(|(c, &lam)| if *c == Complex64::new(0.0, 0.0) { *c } else { c * value(lam) })
        .collect();
    Ok(SpectralField::new(coeffs))
}

/// `Λ^σ f = -(-Δ)^σ f`, a nonpositive operator.
pub fn frac_laplacian(m: &Manifold, f: &SpectralField, sigma: f64) -> Result<SpectralField> {
    check_sigma(sigma)?;
    m.apply_multiplier(f, |lam| if lam == 0.0 { 0.0 } else { -libm::pow(lam, sigma) })
}

/// `(-Δ)^σ f`.
pub fn neg_frac_laplacian(m: &Manifold, f: &SpectralField, sigma: f64) -> Result<SpectralField> {
    Ok(frac_laplacian(m, f, sigma)?.scaled(-1.0))
}

/// Heat semigroup `e^{tΔ} f`.
pub fn heat(m: &Manifold, f: &SpectralField, t: f64) -> Result<SpectralField> {
    if !(t >= 0.0) {
        return Err(domain("heat time", t));
    }
    m.apply_multiplier(f, |lam| libm::exp(-lam * t))
}

/// `P_z f` in coefficient space: mode `k` times `θ_s(z√λ_k)`.
pub fn poisson_spectral(m: &Manifold, f: &SpectralField, p: &FracParams, z: f64) -> Result<SpectralField> {
    check_height(z)?;
    cached_multiplier(m, f, |lam| p.theta(z * libm::sqrt(lam)))
}

/// `∂_z P_z f` in coefficient space: mode `k` times `√λ_k θ_s'(z√λ_k)`.
pub fn poisson_dz_spectral(m: &Manifold, f: &SpectralField, p: &FracParams, z: f64) -> Result<SpectralField> {
    check_height(z)?;
    cached_multiplier(m, f, |lam| {
        if lam == 0.0 {
            0.0
        } else {
            let r = libm::sqrt(lam);
            r * p.theta_deriv(z * r)
        }
    })
}

/// `P_z g` for a grid field: analyse, multiply, synthesise.
pub fn poisson_apply(m: &Manifold, g: &GridField, p: &FracParams, z: f64) -> Result<GridField> {
    m.synthesize(&poisson_spectral(m, &m.analyze(g)?, p, z)?)
}

/// Extension data at one height.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionSlice {
    pub z: f64,
    /// `U(·, z)`.
    pub u_slice: GridField,
    /// `∇U(·, z)` in the manifold's orthonormal frame.
    pub grad: Vec<GridField>,
    /// `∂_z U(·, z)`.
    pub dz: GridField,
}

/// Coefficients of `U(·, z)` and `∂_zU(·, z)`.
pub fn extension_spectral(
    m: &Manifold,
    u: &SpectralField,
    p: &FracParams,
    z: f64,
) -> Result<(SpectralField, SpectralField)> {
    Ok((poisson_spectral(m, u, p, z)?, poisson_dz_spectral(m, u, p, z)?))
}

/// `U`, `∇U` and `∂_zU` at height `z` on the grid of `m`.
pub fn extension_slice(m: &Manifold, u: &SpectralField, p: &FracParams, z: f64) -> Result<ExtensionSlice> {
    let (uz, dz) = extension_spectral(m, u, p, z)?;
    Ok(ExtensionSlice { z, u_slice: m.synthesize(&uz)?, grad: m.gradient(&uz)?, dz: m.synthesize(&dz)? })
}

/// `β_s z^{1-2s} ∂_zU(·, z)`, which tends to `Λ^s u` as `z → 0`.
pub fn dtn_slice(m: &Manifold, u: &SpectralField, p: &FracParams, z: f64) -> Result<SpectralField> {
    Ok(poisson_dz_spectral(m, u, p, z)?.scaled(p.beta() * libm::pow(z, 1.0 - 2.0 * p.s())))
}

/// Heat-subordination value of `θ_s(z√λ)`:
/// `z^{2s}/(4^sΓ(s)) ∫₀^∞ e^{-λt - z²/(4t)} t^{-1-s} dt`, integrated in
/// `τ = ln t` by a truncated trapezoidal sum.
pub fn heat_subordination_multiplier(s: f64, lambda: f64, z: f64, tol: f64) -> Result<(f64, f64)> {
    let norm = libm::pow(z, 2.0 * s) / (libm::pow(4.0, s) * gamma(s)?);
    let a = 0.25 * z * z;
    let log_f = |tau: f64| -lambda * libm::exp(tau) - a * libm::exp(-tau) - s * tau;
    // peak of the log-integrand
    let center = if lambda > 0.0 {
        libm::log((-s + libm::sqrt(s * s + 4.0 * lambda * a)) / (2.0 * lambda))
    } else {
        libm::log(a / s)
    };
    let shift = log_f(center);
    let r = line_trapezoid(|tau| libm::exp(log_f(tau) - shift), center, tol)?;
    let scale = norm * libm::exp(shift);
    Ok((r.value * scale, r.error * scale))
}

/// `U(·, z)` from the heat semigroup, independent of the Bessel multiplier.
/// Returns the field and the achieved quadrature error estimate.
pub fn extension_oracle_heat(m: &Manifold, u: &SpectralField, p: &FracParams, z: f64) -> Result<(GridField, f64)> {
    check_height(z)?;
    let mut worst = 0.0f64;
    let mut failure = None;
    let f = cached_multiplier(m, u, |lam| match heat_subordination_multiplier(p.s(), lam, z, 1e-14) {
        Ok((v, e)) => {
            worst = worst.max(e);
            v
        }
        Err(err) => {
            failure = Some(err);
            f64::NAN
        }
    })?;
    if let Some(err) = failure {
        return Err(err);
    }
    Ok((m.synthesize(&f)?, worst))
}

const IBP_TERMS: u32 = 4;

/// Raw principal-value integral `∫₀^∞ (2u(x) - u(x+h) - u(x-h)) h^{-1-2s} dh`
/// at every grid node of the circle, computed from point values of `u`.
///
/// This equals `C (-Δ)^s u` for a constant `C` that is not supplied; callers
/// calibrate it. The second return value is an estimate of the truncation
/// error of the tail beyond the cutoff.
pub fn singular_integral_oracle_circle(m: &Manifold, u: &SpectralField, s: f64) -> Result<(GridField, f64)> {
    if !(s > 0.0 && s < 1.0) {
        return Err(domain("fractional order", s));
    }
    let circle = m.as_circle()?;
    let c = u.coeffs();
    let kmax =
        (0..c.len()).filter(|&i| c[i].norm() > 0.0).map(|i| circle.wavenumber(i).unsigned_abs()).max().unwrap_or(0);
    let nodes: Vec<f64> = (0..m.num_nodes()).map(|i| m.node(i)[0]).collect();
    if kmax == 0 {
        return Ok((GridField::constant(nodes.len(), 0.0), 0.0));
    }
    let kf = kmax as f64;
    let p = 1.0 + 2.0 * s;
    let delta = 0.5 / kf;
    let big_h = 2.0 * PI * 32.0;

    // near field: Taylor-subtracted, weight h^{1-2s}
    let head = gauss_jacobi_left(24, 1.0 - 2.0 * s, delta)?;
    // middle: graded then uniform Gauss-Legendre panels
    let gl = gauss_legendre(16)?;
    let mut mid_nodes = Vec::new();
    let mut mid_weights = Vec::new();
    let mut a = delta;
    let panel = 0.5 / kf;
    while a < big_h - 1e-12 {
        let b = (a + panel.max(a.min(1.0) * 0.5)).min(big_h);
        let r = gl.mapped(a, b);
        for (&h, &w) in r.nodes.iter().zip(&r.weights) {
            mid_nodes.push(h);
            mid_weights.push(w * libm::pow(h, -p));
        }
        a = b;
    }

    // antiderivatives of h ↦ u(x+h) + u(x-h) minus its mean
    let circle_eval = |x: f64, order: u32| circle.eval_derivative(c, x, order);
    let anti = |x: f64, h: f64, times: u32| -> f64 {
        let mut acc = 0.0;
        for (i, ci) in c.iter().enumerate() {
            let k = circle.wavenumber(i);
            if k == 0 {
                continue;
            }
            let kf = k as f64;
            let base = *ci * Complex64::new(libm::cos(kf * x), libm::sin(kf * x));
            let plus = Complex64::new(libm::cos(kf * h), libm::sin(kf * h));
            // ∫ e^{ikh} = e^{ikh}/(ik); ∫ e^{-ikh} = e^{-ikh}/(-ik)
            let ik = Complex64::new(0.0, kf).powu(times);
            let mik = Complex64::new(0.0, -kf).powu(times);
            let term = plus / ik + plus.conj() / mik;
            acc += (base * term).re;
        }
        acc
    };
    let mean = c[circle.index(0)].re;
    // bound on the antiderivative one past the last one used
    let mut next_bound = 0.0;
    for (i, ci) in c.iter().enumerate() {
        let k = circle.wavenumber(i);
        if k != 0 {
            next_bound += 2.0 * ci.norm() / libm::pow(k.unsigned_abs() as f64, (IBP_TERMS + 1) as f64);
        }
    }
    let mut out = Vec::with_capacity(nodes.len());
    for &x in &nodes {
        let ux = circle_eval(x, 0);
        let uxx = circle_eval(x, 2);
        let near: f64 = head
            .nodes
            .iter()
            .zip(&head.weights)
            .map(|(&h, &w)| {
                let d = 2.0 * ux - circle_eval(x + h, 0) - circle_eval(x - h, 0) + uxx * h * h;
                w * d / (h * h)
            })
            .sum::<f64>()
            - uxx * libm::pow(delta, 2.0 - 2.0 * s) / (2.0 - 2.0 * s);
        let middle: f64 = mid_nodes
            .iter()
            .zip(&mid_weights)
            .map(|(&h, &w)| w * (2.0 * ux - circle_eval(x + h, 0) - circle_eval(x - h, 0)))
            .sum();
        // tail: 2(u(x) - ū) H^{-2s}/(2s) minus the oscillatory part, by
        // parts: ∫_H^∞ o h^{-p} = -Σ_j p(p+1)…(p+j-2) O_j(H) H^{-p-j+1} + …
        let mut osc = 0.0;
        let mut coef = 1.0;
        for j in 1..=IBP_TERMS {
            osc -= coef * anti(x, big_h, j) * libm::pow(big_h, -p - (j - 1) as f64);
            coef *= p + (j - 1) as f64;
        }
        let tail = 2.0 * (ux - mean) * libm::pow(big_h, -2.0 * s) / (2.0 * s) - osc;
        out.push(near + middle + tail);
    }
    let mut coef = 1.0;
    for j in 1..=IBP_TERMS {
        coef *= p + (j - 1) as f64;
    }
    let est = coef * next_bound * libm::pow(big_h, -p - IBP_TERMS as f64) / (p + IBP_TERMS as f64);
    Ok((GridField::new(out)?, est))
}

/// `∫₀^∞ (2 - 2cos h) h^{-1-2s} dh`, the constant relating the raw singular
/// integral to `(-Δ)^s` on the circle, in closed form.
pub fn singular_integral_constant(s: f64) -> Result<f64> {
    // = -2Γ(-2s)cos(πs) = Γ(1-2s)cos(πs)/s for s ≠ 1/2, π at s = 1/2
    if (s - 0.5).abs() < 1e-12 {
        return Ok(PI);
    }
    Ok(gamma_signed(1.0 - 2.0 * s)? * libm::cos(PI * s) / s)
}

/// Γ on `(-1, ∞) \ {0}` through `Γ(x) = Γ(x+1)/x`.
fn gamma_signed(x: f64) -> Result<f64> {
    if x > 0.0 {
        gamma(x)
    } else if x > -1.0 && x != 0.0 {
        Ok(gamma(x + 1.0)? / x)
    } else {
        Err(Error::Domain { what: "gamma argument", value: x })
    }
}

/// `Σ_k λ_k^σ u_k conj(v_k)` times the basis normalisation, i.e.
/// `⟨(-Δ)^{σ/2}u, (-Δ)^{σ/2}v⟩_{L²}`.
pub fn hs_inner(m: &Manifold, u: &SpectralField, v: &SpectralField, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    m.weighted_inner(u, v, |lam| if lam == 0.0 { 0.0 } else { libm::pow(lam, sigma) })
}

/// `∫₀^∞ ∫_M |∇̄U|² dμ z^{1-2s} dz`, with `|∇U|²` on the horizontal rule and
/// `(∂_zU)²` on the vertical one. The inner integrals use the grid
/// quadrature, which is exact for squares of band-limited fields.
pub fn weighted_seminorm_sq(m: &Manifold, u: &SpectralField, p: &FracParams, rules: &ZRules) -> Result<f64> {
    let mut h = Vec::with_capacity(rules.horizontal.len());
    for &z in rules.horizontal.nodes() {
        let uz = poisson_spectral(m, u, p, z)?;
        let g = m.gradient(&uz)?;
        let mut acc = 0.0;
        for comp in &g {
            acc += m.integrate(&comp.mul(comp)?)?;
        }
        h.push(acc);
    }
    let mut v = Vec::with_capacity(rules.vertical.len());
    for &z in rules.vertical.nodes() {
        let dz = m.synthesize(&poisson_dz_spectral(m, u, p, z)?)?;
        v.push(m.integrate(&dz.mul(&dz)?)?);
    }
    Ok(rules.horizontal.integrate(&h)? + rules.vertical.integrate(&v)?)
}
