//! Compact base manifolds with spectral transforms.
//!
//! A [`Manifold`] fixes the mode cutoff and one collocation grid. Manifolds
//! that differ only in their grid factor share the same mode layout, so a
//! [`SpectralField`] can be synthesised on the base grid or on any refined
//! grid; pointwise products and compositions are formed on a refined grid and
//! truncated back to the cutoff on analysis.

mod circle;
mod sphere;
mod torus;

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

pub use circle::Circle;
pub use sphere::Sphere;
pub use torus::Torus;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ManifoldKind {
    /// Circle of circumference `2π`.
    Circle,
    /// Flat torus `[0, 2π)²`.
    Torus,
    /// Unit sphere `S²`.
    Sphere,
}

impl ManifoldKind {
    pub fn name(self) -> &'static str {
        match self {
            ManifoldKind::Circle => "circle",
            ManifoldKind::Torus => "torus",
            ManifoldKind::Sphere => "sphere",
        }
    }

    pub fn volume(self) -> f64 {
        match self {
            ManifoldKind::Circle => 2.0 * PI,
            ManifoldKind::Torus => 4.0 * PI * PI,
            ManifoldKind::Sphere => 4.0 * PI,
        }
    }

    /// Smallest nonzero eigenvalue of `-Δ`.
    pub fn lambda_min_nonzero(self) -> f64 {
        match self {
            ManifoldKind::Circle | ManifoldKind::Torus => 1.0,
            ManifoldKind::Sphere => 2.0,
        }
    }
}

impl core::str::FromStr for ManifoldKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "circle" => Ok(ManifoldKind::Circle),
            "torus" => Ok(ManifoldKind::Torus),
            "sphere" => Ok(ManifoldKind::Sphere),
            other => Err(Error::InvalidInput(alloc::format!("unknown manifold '{other}'"))),
        }
    }
}

/// Eigen-coefficients of a real function.
///
/// Circle and torus use complex Fourier coefficients of `e^{ik·x}` (conjugate
/// symmetric); the sphere uses real orthonormal spherical harmonics, stored
/// with zero imaginary part.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        SpectralField { coeffs }
    }

    pub fn zeros(len: usize) -> Self {
        SpectralField { coeffs: vec![Complex64::new(0.0, 0.0); len] }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn scaled(&self, a: f64) -> SpectralField {
        SpectralField { coeffs: self.coeffs.iter().map(|c| c * a).collect() }
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &SpectralField) -> Result<SpectralField> {
        check_len(self.len(), other.len())?;
        Ok(SpectralField { coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(x, y)| x + y * a).collect() })
    }

    pub fn add(&self, other: &SpectralField) -> Result<SpectralField> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &SpectralField) -> Result<SpectralField> {
        self.axpy(-1.0, other)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// Point values on a manifold's collocation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    values: Vec<f64>,
}

impl GridField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(alloc::format!("non-finite grid value {v}")));
        }
        Ok(GridField { values })
    }

    pub(crate) fn from_vec(values: Vec<f64>) -> Self {
        GridField { values }
    }

    pub fn constant(len: usize, c: f64) -> Self {
        GridField { values: vec![c; len] }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridField {
        GridField { values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_with(&self, other: &GridField, f: impl Fn(f64, f64) -> f64) -> Result<GridField> {
        check_len(self.len(), other.len())?;
        Ok(GridField { values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect() })
    }

    pub fn add(&self, other: &GridField) -> Result<GridField> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &GridField) -> Result<GridField> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &GridField) -> Result<GridField> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scaled(&self, a: f64) -> GridField {
        self.map(|v| a * v)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::ResolutionMismatch { expected, found });
    }
    Ok(())
}

/// Sum of squares of a list of grid fields.
pub(crate) fn sum_of_squares(parts: &[GridField]) -> GridField {
    let mut out = vec![0.0; parts.first().map_or(0, GridField::len)];
    for p in parts {
        for (o, v) in out.iter_mut().zip(p.values()) {
            *o += v * v;
        }
    }
    GridField::from_vec(out)
}

/// Pointwise `Σ_i a_i b_i`.
pub(crate) fn dot(a: &[GridField], b: &[GridField]) -> Result<GridField> {
    check_len(a.len(), b.len())?;
    let mut out = vec![0.0; a.first().map_or(0, GridField::len)];
    for (x, y) in a.iter().zip(b) {
        check_len(out.len(), x.len())?;
        check_len(out.len(), y.len())?;
        for ((o, p), q) in out.iter_mut().zip(x.values()).zip(y.values()) {
            *o += p * q;
        }
    }
    Ok(GridField::from_vec(out))
}

/// A base manifold at a fixed mode cutoff and grid.
#[derive(Debug, Clone)]
pub enum Manifold {
    Circle(Circle),
    Torus(Torus),
    Sphere(Sphere),
}

macro_rules! dispatch {
    ($self:ident, $m:ident => $e:expr) => {
        match $self {
            Manifold::Circle($m) => $e,
            Manifold::Torus($m) => $e,
            Manifold::Sphere($m) => $e,
        }
    };
}

impl Manifold {
    /// Builds the base-grid manifold. `modes` is the maximal `|k|` per
    /// direction on the circle and torus and the maximal degree on the sphere.
    pub fn new(kind: ManifoldKind, modes: usize) -> Result<Self> {
        Self::with_grid_factor(kind, modes, 1)
    }

    pub fn with_grid_factor(kind: ManifoldKind, modes: usize, factor: usize) -> Result<Self> {
        if modes < 4 {
            return Err(Error::InvalidInput(alloc::format!("mode cutoff {modes} below 4")));
        }
        if factor == 0 {
            return Err(Error::InvalidInput("grid factor must be positive".into()));
        }
        Ok(match kind {
            ManifoldKind::Circle => Manifold::Circle(Circle::new(modes, factor)?),
            ManifoldKind::Torus => Manifold::Torus(Torus::new(modes, factor)?),
            ManifoldKind::Sphere => Manifold::Sphere(Sphere::new(modes, factor)?),
        })
    }

    pub fn circle(modes: usize) -> Result<Self> {
        Self::new(ManifoldKind::Circle, modes)
    }

    pub fn torus(modes: usize) -> Result<Self> {
        Self::new(ManifoldKind::Torus, modes)
    }

    pub fn sphere(degree: usize) -> Result<Self> {
        Self::new(ManifoldKind::Sphere, degree)
    }

    /// Same modes, grid refined by `factor` relative to the base grid.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::with_grid_factor(self.kind(), self.modes(), factor)
    }

    pub fn kind(&self) -> ManifoldKind {
        match self {
            Manifold::Circle(_) => ManifoldKind::Circle,
            Manifold::Torus(_) => ManifoldKind::Torus,
            Manifold::Sphere(_) => ManifoldKind::Sphere,
        }
    }

    pub fn modes(&self) -> usize {
        dispatch!(self, m => m.modes())
    }

    pub fn grid_factor(&self) -> usize {
        dispatch!(self, m => m.factor())
    }

    pub fn num_modes(&self) -> usize {
        self.eigenvalues().len()
    }

    pub fn num_nodes(&self) -> usize {
        self.weights().len()
    }

    /// Eigenvalues of `-Δ`, one per mode, in coefficient order.
    pub fn eigenvalues(&self) -> &[f64] {
        dispatch!(self, m => m.eigenvalues())
    }

    /// Volume quadrature weights of the grid.
    pub fn weights(&self) -> &[f64] {
        dispatch!(self, m => m.weights())
    }

    /// Coordinates of grid node `i`: `[x]`, `[x, y]` or `[θ, φ]`.
    pub fn node(&self, i: usize) -> [f64; 2] {
        dispatch!(self, m => m.node(i))
    }

    pub fn zero_spectral(&self) -> SpectralField {
        SpectralField::zeros(self.num_modes())
    }

    pub fn analyze(&self, g: &GridField) -> Result<SpectralField> {
        check_len(self.num_nodes(), g.len())?;
        Ok(SpectralField::new(dispatch!(self, m => m.analyze(g.values()))))
    }

    pub fn synthesize(&self, f: &SpectralField) -> Result<GridField> {
        check_len(self.num_modes(), f.len())?;
        Ok(GridField::from_vec(dispatch!(self, m => m.synthesize(f.coeffs()))))
    }

    /// Samples `f` at the grid nodes and analyses the result.
    pub fn project(&self, f: impl Fn([f64; 2]) -> f64) -> Result<SpectralField> {
        let values = (0..self.num_nodes()).map(|i| f(self.node(i))).collect();
        self.analyze(&GridField::new(values)?)
    }

    /// Multiplies mode `k` by `m(λ_k)`.
    pub fn apply_multiplier(&self, f: &SpectralField, m: impl Fn(f64) -> f64) -> Result<SpectralField> {
        check_len(self.num_modes(), f.len())?;
        Ok(SpectralField::new(f.coeffs().iter().zip(self.eigenvalues()).map(|(c, &lam)| c * m(lam)).collect()))
    }

    /// Laplace-Beltrami operator: mode `k` times `-λ_k`.
    pub fn laplacian(&self, f: &SpectralField) -> Result<SpectralField> {
        self.apply_multiplier(f, |lam| -lam)
    }

    /// Coordinate components of the gradient in an orthonormal frame
    /// (`∂_x`; `∂_x, ∂_y`; `∂_θ, (1/sinθ)∂_φ`).
    pub fn gradient(&self, f: &SpectralField) -> Result<Vec<GridField>> {
        check_len(self.num_modes(), f.len())?;
        Ok(dispatch!(self, m => m.gradient(f.coeffs())).into_iter().map(GridField::from_vec).collect())
    }

    /// `|∇²f|²` with the covariant Hessian.
    pub fn hessian_sq_norm(&self, f: &SpectralField) -> Result<GridField> {
        check_len(self.num_modes(), f.len())?;
        Ok(GridField::from_vec(dispatch!(self, m => m.hessian_sq_norm(f.coeffs()))))
    }

    /// `Ric(X, X)` for a vector field given by its orthonormal-frame components.
    pub fn ricci_quadratic(&self, x: &[GridField]) -> Result<GridField> {
        let dim = match self.kind() {
            ManifoldKind::Circle => 1,
            _ => 2,
        };
        check_len(dim, x.len())?;
        for c in x {
            check_len(self.num_nodes(), c.len())?;
        }
        Ok(match self.kind() {
            ManifoldKind::Circle | ManifoldKind::Torus => GridField::constant(self.num_nodes(), 0.0),
            // unit sphere: Ric = g
            ManifoldKind::Sphere => sum_of_squares(x),
        })
    }

    /// Product of two base-grid fields formed on a grid refined by `dealias`
    /// and truncated back to the mode cutoff.
    pub fn pointwise_product(&self, a: &GridField, b: &GridField, dealias: usize) -> Result<GridField> {
        let fa = self.analyze(a)?;
        let fb = self.analyze(b)?;
        let fine = self.refined(dealias * self.grid_factor())?;
        self.synthesize(&fine.product(&fa, &fb)?)
    }

    /// `a · b` evaluated on this grid and analysed.
    pub fn product(&self, a: &SpectralField, b: &SpectralField) -> Result<SpectralField> {
        let ga = self.synthesize(a)?;
        let gb = self.synthesize(b)?;
        self.analyze(&ga.mul(&gb)?)
    }

    /// `φ(f)` evaluated on this grid and analysed.
    pub fn compose(&self, f: &SpectralField, phi: impl Fn(f64) -> f64) -> Result<SpectralField> {
        self.analyze(&self.synthesize(f)?.map(phi))
    }

    /// `∇a · ∇b` evaluated on this grid and analysed.
    pub fn grad_dot(&self, a: &SpectralField, b: &SpectralField) -> Result<SpectralField> {
        let ga = self.gradient(a)?;
        let gb = self.gradient(b)?;
        self.analyze(&dot(&ga, &gb)?)
    }

    /// `∫_M g dμ` by the grid quadrature.
    pub fn integrate(&self, g: &GridField) -> Result<f64> {
        check_len(self.num_nodes(), g.len())?;
        Ok(g.values().iter().zip(self.weights()).map(|(v, w)| v * w).sum())
    }

    /// `L^p` norm on the grid; `p = ∞` gives the max norm.
    pub fn lp_norm(&self, g: &GridField, p: f64) -> Result<f64> {
        if p.is_infinite() {
            return Ok(g.max_abs());
        }
        let s = self.integrate(&g.map(|v| libm::pow(v.abs(), p)))?;
        Ok(libm::pow(s, 1.0 / p))
    }

    /// `⟨a, b⟩_{L²(M)}` computed from coefficients.
    pub fn inner(&self, a: &SpectralField, b: &SpectralField) -> Result<f64> {
        self.weighted_inner(a, b, |_| 1.0)
    }

    /// `Σ_k w(λ_k) a_k conj(b_k)` times the basis normalisation.
    pub fn weighted_inner(&self, a: &SpectralField, b: &SpectralField, w: impl Fn(f64) -> f64) -> Result<f64> {
        check_len(self.num_modes(), a.len())?;
        check_len(self.num_modes(), b.len())?;
        let norm = match self.kind() {
            ManifoldKind::Sphere => 1.0,
            kind => kind.volume(),
        };
        let s: f64 = a
            .coeffs()
            .iter()
            .zip(b.coeffs())
            .zip(self.eigenvalues())
            .map(|((x, y), &lam)| w(lam) * (x * y.conj()).re)
            .sum();
        Ok(norm * s)
    }

    /// Mean value `∫ f dμ / |M|` from the constant mode.
    pub fn mean(&self, f: &SpectralField) -> Result<f64> {
        check_len(self.num_modes(), f.len())?;
        Ok(match self {
            Manifold::Circle(c) => f.coeffs()[c.index(0)].re,
            Manifold::Torus(t) => f.coeffs()[t.index(0, 0)].re,
            Manifold::Sphere(_) => f.coeffs()[0].re * libm::sqrt(4.0 * PI) / (4.0 * PI),
        })
    }

    pub fn as_circle(&self) -> Result<&Circle> {
        match self {
            Manifold::Circle(c) => Ok(c),
            _ => Err(Error::Unsupported("operation requires the circle")),
        }
    }

    pub fn as_torus(&self) -> Result<&Torus> {
        match self {
            Manifold::Torus(t) => Ok(t),
            _ => Err(Error::Unsupported("operation requires the torus")),
        }
    }

    pub fn as_sphere(&self) -> Result<&Sphere> {
        match self {
            Manifold::Sphere(s) => Ok(s),
            _ => Err(Error::Unsupported("operation requires the sphere")),
        }
    }
}

/// Smallest power of two that is at least `n`.
pub(crate) fn pow2_at_least(n: usize) -> usize {
    n.next_power_of_two()
}
