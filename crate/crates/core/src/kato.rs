//! Level sets of the extension over the circle and the exact remainder in
//! Kato's inequality,
//! `∫(Λ^s|u| - sgn(u)Λ^su)φ = 2β_s∫_{U=0}|∇̄U|Φ z^{1-2s} dH¹ + ∫_{u=0}|Λ^su|φ`
//! with `Φ = P_zφ`.
//!
//! Contours come from marching squares on a mesh that is uniform in `x` and
//! geometrically graded in `z` from `z_min` upward. Extension values are
//! evaluated exactly at every mesh node and quadrature point. Below `z_min`
//! each branch reaching the bottom row is followed as a graph `x(z)` and
//! integrated with Gauss-Jacobi rules that carry the endpoint behaviour.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::manifold::{Circle, Manifold, ManifoldKind, SpectralField};
use crate::operators::frac_laplacian;
use crate::quad::{gauss_jacobi_left, gauss_legendre, Rule};
use crate::report::{Check, IdentityReport};
use crate::special::FracParams;
use crate::zquad::build_rule;

/// Offset of the mesh columns in cells, `(3 - √5)/2`.
const X_SHIFT: f64 = 0.381_966_011_250_105_1;

/// Gauss-Legendre points per contour segment.
const CURVE_POINTS: usize = 4;

/// Quadrature points per piece below `z_min`.
const SLIVER_POINTS: usize = 10;
/// Geometric panels below `z_min`, each a factor `SLIVER_RATIO` lower.
const SLIVER_PANELS: usize = 10;
const SLIVER_RATIO: f64 = 4.0;

/// Relative tolerance of the Kato comparison.
pub const KATO_TOL: f64 = 1e-3;

/// A function on the circle: its coefficients, and optionally its exact
/// pointwise values when it is not band-limited.
#[derive(Clone)]
pub struct KatoField {
    m: Manifold,
    coeffs: SpectralField,
    exact: Option<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
}

impl core::fmt::Debug for KatoField {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("KatoField").field("modes", &self.m.modes()).field("exact", &self.exact.is_some()).finish()
    }
}

impl KatoField {
    pub fn band_limited(m: &Manifold, coeffs: SpectralField) -> Result<Self> {
        m.as_circle()?;
        if coeffs.len() != m.num_modes() {
            return Err(Error::ResolutionMismatch { expected: m.num_modes(), found: coeffs.len() });
        }
        Ok(KatoField { m: m.clone(), coeffs, exact: None })
    }

    /// Projects `f` onto the modes of `m` and keeps `f` for pointwise values,
    /// signs and zero sets.
    pub fn sampled(m: &Manifold, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        let fine = m.refined(8 * m.grid_factor())?;
        let coeffs = fine.project(|x| f(x[0]))?;
        Ok(KatoField { m: m.clone(), coeffs, exact: Some(Arc::new(f)) })
    }

    pub fn manifold(&self) -> &Manifold {
        &self.m
    }

    pub fn coeffs(&self) -> &SpectralField {
        &self.coeffs
    }

    fn circle(&self) -> &Circle {
        self.m.as_circle().expect("checked at construction")
    }

    pub fn value(&self, x: f64) -> f64 {
        match &self.exact {
            Some(f) => f(x),
            None => self.circle().eval(self.coeffs.coeffs(), x),
        }
    }
}

/// `θ_s(z|k|)` and `|k|θ_s'(z|k|)` for `k = 0..=n`.
fn multipliers(p: &FracParams, n: usize, z: f64) -> (Vec<f64>, Vec<f64>) {
    let th = (0..=n).map(|k| p.theta(z * k as f64)).collect();
    let dth = (0..=n).map(|k| if k == 0 { 0.0 } else { k as f64 * p.theta_deriv(z * k as f64) }).collect();
    (th, dth)
}

/// `(U, ∂_xU, ∂_zU)` at `(x, z)`, by direct summation over `±k` pairs.
/// Pairs below roundoff relative to the largest coefficient are skipped, which
/// spares the Bessel evaluations for projected data that is really sparse.
fn extension_point(c: &Circle, coeffs: &SpectralField, p: &FracParams, x: f64, z: f64) -> (f64, f64, f64) {
    let a = coeffs.coeffs();
    let n = c.modes();
    let cut = 1e-14 * a.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let (mut u, mut ux, mut uz) = (0.0, 0.0, 0.0);
    for k in 0..=n {
        let (cp, cm) = (a[n + k], a[n - k]);
        if k == 0 {
            u += cp.re;
            continue;
        }
        if cp.norm() + cm.norm() <= cut {
            continue;
        }
        let kf = k as f64;
        let th = p.theta(z * kf);
        let dth = kf * p.theta_deriv(z * kf);
        let (sn, cs) = libm::sincos(kf * x);
        // c_k e^{ikx} + c_{-k} e^{-ikx}, real and imaginary parts
        let re = (cp.re + cm.re) * cs - (cp.im - cm.im) * sn;
        let dre = -(cp.re + cm.re) * sn - (cp.im - cm.im) * cs;
        u += th * re;
        ux += kf * th * dre;
        uz += dth * re;
    }
    (u, ux, uz)
}

/// Root of `f` between `a` and `b` given `f(a)`, `f(b)` of opposite signs,
/// by the Illinois variant of regula falsi.
fn bracketed_root(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64) -> f64 {
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    let mut side = 0;
    for _ in 0..60 {
        let c = (a * fb - b * fa) / (fb - fa);
        let fc = f(c);
        if fc == 0.0 || (b - a).abs() <= 4.0 * f64::EPSILON * (a.abs() + b.abs()) {
            return c;
        }
        if (fc > 0.0) == (fb > 0.0) {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
        if (b - a).abs() <= 1e-15 * (1.0 + a.abs()) {
            break;
        }
    }
    (a * fb - b * fa) / (fb - fa)
}

/// Mesh for the `(x, z)` strip.
#[derive(Debug, Clone, PartialEq)]
pub struct KatoMesh {
    /// Number of uniform cells in `x ∈ [0, 2π)`, periodic.
    pub nx: usize,
    /// Increasing row heights, starting at `z_min`.
    pub z: Vec<f64>,
}

impl KatoMesh {
    pub fn graded(nx: usize, z_min: f64, z_max: f64, ratio: f64) -> Result<Self> {
        if nx < 8 {
            return Err(Error::InvalidInput(format!("mesh needs at least 8 x-cells, got {nx}")));
        }
        if !(z_min > 0.0 && z_max > z_min && ratio > 1.0) {
            return Err(Error::InvalidInput(format!("bad z grading {z_min} {z_max} {ratio}")));
        }
        let mut z = vec![z_min];
        while *z.last().unwrap() < z_max {
            let next = z.last().unwrap() * ratio;
            z.push(next.min(z_max));
        }
        Ok(KatoMesh { nx, z })
    }

    /// Refinement level `l`: `64·2^l` cells in `x`, grading ratio
    /// `1.15^{2^{-l}}` from `z_min = 1e-4` up to the height where the
    /// z-rule for `λ₁ = 1` truncates.
    pub fn level(p: &FracParams, l: usize) -> Result<Self> {
        let z_max = build_rule(p, 1.0, 1e-12)?.z_max();
        let ratio = libm::pow(1.15, 1.0 / (1u64 << l) as f64);
        Self::graded(64 << l, 1e-4, z_max, ratio)
    }

    pub fn z_min(&self) -> f64 {
        self.z[0]
    }

    /// Column `i`, shifted by an irrational fraction of a cell so that zero
    /// lines forced by symmetry (`x = π/2` for odd-harmonic data, say) never
    /// fall on a column of nodes.
    pub fn x(&self, i: usize) -> f64 {
        2.0 * PI * (i as f64 + X_SHIFT) / self.nx as f64
    }
}

/// Mesh edge carrying a contour vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Edge {
    /// Between `(i, j)` and `(i+1, j)`.
    H(usize, usize),
    /// Between `(i, j)` and `(i, j+1)`.
    V(usize, usize),
}

/// One straight piece of a level curve inside one mesh cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub length: f64,
    pub z_mid: f64,
    /// `|∇̄U|` at the midpoint.
    pub grad_mid: f64,
}

/// Level set `{U = t}` on a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroContour {
    pub level: f64,
    pub s: f64,
    pub segments: Vec<Segment>,
    /// Vertices of the chained segments, as `(x, z)`.
    pub polylines: Vec<Vec<[f64; 2]>>,
    /// Vertices on the bottom row `z = z_min`.
    pub bottom: Vec<[f64; 2]>,
    pub z_min: f64,
    /// Range of `U` over the mesh nodes.
    pub range: (f64, f64),
}

impl ZeroContour {
    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn total_length(&self) -> f64 {
        self.segments.iter().map(|s| s.length).sum()
    }
}

/// Values of `U` on the mesh, row by row.
fn mesh_values(u: &KatoField, p: &FracParams, mesh: &KatoMesh) -> Vec<Vec<f64>> {
    let c = u.circle();
    let n = c.modes();
    let trig: Vec<Vec<(f64, f64)>> =
        (0..mesh.nx).map(|i| (0..=n).map(|k| libm::sincos(k as f64 * mesh.x(i))).collect()).collect();
    let coeffs = u.coeffs.coeffs();
    mesh.z
        .iter()
        .map(|&z| {
            let (th, _) = multipliers(p, n, z);
            trig.iter()
                .map(|t| {
                    let mut acc = 0.0;
                    for (idx, ci) in coeffs.iter().enumerate() {
                        let k = c.wavenumber(idx);
                        let (sn, cs) = t[k.unsigned_abs() as usize];
                        let sn = if k < 0 { -sn } else { sn };
                        acc += th[k.unsigned_abs() as usize] * (ci.re * cs - ci.im * sn);
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

/// `{U = t}` by marching squares. Cells with four sign changes are resolved
/// by the sign of `U - t` at the cell centre.
pub fn extract_level_contour(u: &KatoField, p: &FracParams, mesh: &KatoMesh, t: f64) -> Result<ZeroContour> {
    let c = u.circle();
    let vals = mesh_values(u, p, mesh);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for row in &vals {
        for &v in row {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    let nx = mesh.nx;
    let pos = |i: usize, j: usize| vals[j][i % nx] - t > 0.0;
    let xcoord = |i: usize| mesh.x(i);
    // crossings are solved exactly on each edge
    let level = |x: f64, z: f64| extension_point(c, &u.coeffs, p, x, z).0 - t;
    let point = |e: Edge| -> [f64; 2] {
        match e {
            Edge::H(i, j) => {
                let (a, b) = (vals[j][i] - t, vals[j][(i + 1) % nx] - t);
                let z = mesh.z[j];
                [bracketed_root(|x| level(x, z), xcoord(i), xcoord(i + 1), a, b), z]
            }
            Edge::V(i, j) => {
                let (a, b) = (vals[j][i % nx] - t, vals[j + 1][i % nx] - t);
                let x = xcoord(i);
                [x, bracketed_root(|z| level(x, z), mesh.z[j], mesh.z[j + 1], a, b)]
            }
        }
    };
    let mut pairs: Vec<(Edge, Edge, [f64; 2], [f64; 2])> = Vec::new();
    for j in 0..mesh.z.len() - 1 {
        for i in 0..nx {
            let corners = [pos(i, j), pos(i + 1, j), pos(i + 1, j + 1), pos(i, j + 1)];
            let (bottom, right, top, left) = (Edge::H(i, j), Edge::V(i + 1, j), Edge::H(i, j + 1), Edge::V(i, j));
            let mut crossed = Vec::with_capacity(4);
            if corners[0] != corners[1] {
                crossed.push(bottom);
            }
            if corners[1] != corners[2] {
                crossed.push(right);
            }
            if corners[2] != corners[3] {
                crossed.push(top);
            }
            if corners[3] != corners[0] {
                crossed.push(left);
            }
            // right-edge vertices keep x = x_{i+1}, even when i + 1 = nx
            let pt = |e: Edge| -> [f64; 2] {
                match e {
                    Edge::V(k, jj) if k == i + 1 => {
                        let q = point(Edge::V(k % nx, jj));
                        [xcoord(i + 1), q[1]]
                    }
                    _ => point(e),
                }
            };
            let key = |e: Edge| match e {
                Edge::V(k, jj) => Edge::V(k % nx, jj),
                h => h,
            };
            match crossed.len() {
                0 => {}
                2 => pairs.push((key(crossed[0]), key(crossed[1]), pt(crossed[0]), pt(crossed[1]))),
                4 => {
                    let xc = 0.5 * (xcoord(i) + xcoord(i + 1));
                    let zc = 0.5 * (mesh.z[j] + mesh.z[j + 1]);
                    let centre = extension_point(c, &u.coeffs, p, xc, zc).0 - t > 0.0;
                    // cut off each corner whose sign differs from the centre
                    let cuts = [(0, bottom, left), (1, bottom, right), (2, right, top), (3, left, top)];
                    for (k, e1, e2) in cuts {
                        if corners[k] != centre {
                            pairs.push((key(e1), key(e2), pt(e1), pt(e2)));
                        }
                    }
                }
                _ => unreachable!("a square has an even number of sign changes"),
            }
        }
    }

    let mut segments = Vec::with_capacity(pairs.len());
    for &(_, _, a, b) in &pairs {
        let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
        let (_, ux, uz) = extension_point(c, &u.coeffs, p, mid[0], mid[1]);
        segments.push(Segment {
            a,
            b,
            length: libm::hypot(b[0] - a[0], b[1] - a[1]),
            z_mid: mid[1],
            grad_mid: libm::hypot(ux, uz),
        });
    }
    let bottom = pairs
        .iter()
        .flat_map(|&(e1, e2, a, b)| [(e1, a), (e2, b)])
        .filter(|(e, _)| matches!(e, Edge::H(_, 0)))
        .map(|(_, v)| v)
        .collect();
    let polylines = chain(&pairs);
    Ok(ZeroContour { level: t, s: p.s(), segments, polylines, bottom, z_min: mesh.z_min(), range: (lo, hi) })
}

/// `{U = 0}`.
pub fn extract_zero_contour(u: &KatoField, p: &FracParams, mesh: &KatoMesh) -> Result<ZeroContour> {
    extract_level_contour(u, p, mesh, 0.0)
}

/// Chains segments sharing an edge vertex into polylines.
fn chain(pairs: &[(Edge, Edge, [f64; 2], [f64; 2])]) -> Vec<Vec<[f64; 2]>> {
    let mut at: BTreeMap<Edge, Vec<usize>> = BTreeMap::new();
    for (k, &(e1, e2, _, _)) in pairs.iter().enumerate() {
        at.entry(e1).or_default().push(k);
        at.entry(e2).or_default().push(k);
    }
    let mut used = vec![false; pairs.len()];
    let mut out = Vec::new();
    // open chains first, starting from vertices with one segment
    let starts: Vec<usize> = at.values().filter(|v| v.len() == 1).map(|v| v[0]).chain(0..pairs.len()).collect();
    for start in starts {
        if used[start] {
            continue;
        }
        let (e1, e2, a, b) = pairs[start];
        let (mut tail_edge, mut line) = if at[&e1].len() == 1 { (e2, vec![a, b]) } else { (e1, vec![b, a]) };
        used[start] = true;
        while let Some(&next) = at[&tail_edge].iter().find(|&&k| !used[k]) {
            used[next] = true;
            let (f1, f2, fa, fb) = pairs[next];
            if f1 == tail_edge {
                line.push(fb);
                tail_edge = f2;
            } else {
                line.push(fa);
                tail_edge = f1;
            }
        }
        out.push(line);
    }
    out
}

/// `∫ |∇̄U| Φ z^{1-2s} dH¹` over the contour plus the closure of the strip
/// below `z_min`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourIntegral {
    /// Total, including `sliver`.
    pub value: f64,
    /// Contribution of `0 < z < z_min`.
    pub sliver: f64,
    /// `|∇̄U| · |Φ| · z_min^{2-2s}/(2-2s)` at each bottom vertex, summed: the
    /// size of the strip with the integrand frozen at `z_min`.
    pub sliver_bound: f64,
}

/// Moves a chord point along the chord normal `n` onto `{U = t}`. Returns
/// the curve point, `∇U` there, and the speed `|q'(τ)|` of the curve
/// parametrised by the chord, where `q = a + τd + η(τ)n` and
/// `η' = -∇U·d / ∇U·n`. Falls back to the chord when Newton leaves the cell.
#[allow(clippy::too_many_arguments)]
fn project_to_level(
    circ: &Circle,
    coeffs: &SpectralField,
    p: &FracParams,
    t: f64,
    chord: [f64; 2],
    d: [f64; 2],
    n: [f64; 2],
    length: f64,
) -> ([f64; 2], (f64, f64), f64) {
    let at = |eta: f64| [chord[0] + eta * n[0], chord[1] + eta * n[1]];
    let mut eta = 0.0;
    let mut q = chord;
    let (mut val, mut ux, mut uz) = extension_point(circ, coeffs, p, q[0], q[1]);
    for _ in 0..8 {
        let dn = ux * n[0] + uz * n[1];
        if dn == 0.0 {
            break;
        }
        let step = (val - t) / dn;
        let next = eta - step;
        if !(next.abs() < length) || at(next)[1] <= 0.0 {
            break;
        }
        eta = next;
        q = at(eta);
        (val, ux, uz) = extension_point(circ, coeffs, p, q[0], q[1]);
        if step.abs() <= 1e-14 * length {
            break;
        }
    }
    let dn = ux * n[0] + uz * n[1];
    let converged = (val - t).abs() <= 1e-10 * (1.0 + libm::hypot(ux, uz) * length);
    if !converged || dn.abs() < 1e-3 * libm::hypot(ux, uz) {
        let (_, gx, gz) = extension_point(circ, coeffs, p, chord[0], chord[1]);
        return (chord, (gx, gz), length);
    }
    let deta = -(ux * d[0] + uz * d[1]) / dn;
    (q, (ux, uz), libm::hypot(d[0] + deta * n[0], d[1] + deta * n[1]))
}

fn raw_contour_integral(
    c: &ZeroContour,
    u: &KatoField,
    phi: &SpectralField,
    p: &FracParams,
) -> Result<ContourIntegral> {
    if p.s() != c.s {
        return Err(Error::InvalidInput(format!("contour built for s = {}, used with s = {}", c.s, p.s())));
    }
    let circ = u.circle();
    if phi.len() != u.coeffs.len() {
        return Err(Error::ResolutionMismatch { expected: u.coeffs.len(), found: phi.len() });
    }
    let r = gauss_legendre(CURVE_POINTS)?.mapped(0.0, 1.0);
    let w = 1.0 - 2.0 * p.s();
    let mut body = 0.0;
    for seg in &c.segments {
        let d = [seg.b[0] - seg.a[0], seg.b[1] - seg.a[1]];
        if seg.length == 0.0 {
            continue;
        }
        let n = [-d[1] / seg.length, d[0] / seg.length];
        for (&tau, &wt) in r.nodes.iter().zip(&r.weights) {
            let chord = [seg.a[0] + tau * d[0], seg.a[1] + tau * d[1]];
            let ([x, z], (ux, uz), speed) = project_to_level(circ, &u.coeffs, p, c.level, chord, d, n, seg.length);
            let big_phi = extension_point(circ, phi, p, x, z).0;
            body += wt * speed * libm::hypot(ux, uz) * big_phi * libm::pow(z, w);
        }
    }
    let zm = c.z_min;
    let strip = libm::pow(zm, 2.0 - 2.0 * p.s()) / (2.0 - 2.0 * p.s());
    let mut sliver = 0.0;
    let mut bound = 0.0;
    for v in &c.bottom {
        let (_, ux, uz) = extension_point(circ, &u.coeffs, p, v[0], zm);
        let big_phi = extension_point(circ, phi, p, v[0], zm).0;
        bound += libm::hypot(ux, uz) * big_phi.abs() * strip;
        sliver += sliver_integral(circ, &u.coeffs, phi, p, c.level, v[0], zm)?;
    }
    Ok(ContourIntegral { value: body + sliver, sliver, sliver_bound: bound })
}

/// The piece of `∫|∇̄U|Φz^{1-2s}dH¹` below `z_min` on the branch of
/// `{U = t}` ending at `(x_top, z_min)`. The branch is followed down as a graph
/// `x(z)` by Newton steps, where `|∇̄U| dH¹ = |∇̄U|²/|∂_xU| dz`. The `(∂_xU)²`
/// part is regular against `z^{1-2s}`; the `(∂_zU)²` part behaves like
/// `z^{4s-2}` and takes the more singular Jacobi weight.
fn sliver_integral(
    circ: &Circle,
    coeffs: &SpectralField,
    phi: &SpectralField,
    p: &FracParams,
    t: f64,
    x_top: f64,
    zm: f64,
) -> Result<f64> {
    let s = p.s();
    let a_h = 1.0 - 2.0 * s;
    let a_v = a_h.min(2.0 * s - 1.0);
    let mut x = x_top;
    // horizontal and vertical parts of |∇̄U|²/|∂_xU| Φ z^{1-2s}, tracing
    // top-down so each Newton solve starts next to the previous root
    let parts = |z: f64, x: &mut f64| -> Result<(f64, f64)> {
        for _ in 0..50 {
            let (uu, ux, _) = extension_point(circ, coeffs, p, *x, z);
            let dx = (uu - t) / ux;
            *x -= dx;
            if !(dx.abs() > 1e-15) {
                break;
            }
        }
        let (uu, ux, uz) = extension_point(circ, coeffs, p, *x, z);
        if !((uu - t).abs() <= 1e-9 * (1.0 + ux.abs())) || ux == 0.0 {
            return Err(Error::NoConvergence { what: "level-set branch below z_min", estimate: uu - t });
        }
        let k = extension_point(circ, phi, p, *x, z).0 * libm::pow(z, a_h);
        Ok((ux.abs() * k, uz * uz / ux.abs() * k))
    };
    // geometric Gauss-Legendre panels down to z_min·4^{-P}, then Jacobi rules
    // on the innermost piece, where fractional powers of z remain
    let gl = gauss_legendre(SLIVER_POINTS)?;
    let mut total = 0.0;
    let mut hi = zm;
    for _ in 0..SLIVER_PANELS {
        let lo = hi / SLIVER_RATIO;
        let r = gl.mapped(lo, hi);
        for k in (0..r.nodes.len()).rev() {
            let (h, v) = parts(r.nodes[k], &mut x)?;
            total += r.weights[k] * (h + v);
        }
        hi = lo;
    }
    let rh = gauss_jacobi_left(SLIVER_POINTS, a_h, hi)?;
    let rv = gauss_jacobi_left(SLIVER_POINTS, a_v, hi)?;
    for (rule, vertical) in [(rh, false), (rv, true)] {
        let mut xi = x;
        for k in (0..rule.nodes.len()).rev() {
            let z = rule.nodes[k];
            let (h, v) = parts(z, &mut xi)?;
            let g = if vertical { v * libm::pow(z, -a_v) } else { h * libm::pow(z, -a_h) };
            total += rule.weights[k] * g;
        }
    }
    Ok(total)
}

/// `2β_s ∫_{U=0} |∇̄U| Φ z^{1-2s} dH¹` with `Φ = P_zφ`.
pub fn weighted_contour_integral(
    c: &ZeroContour,
    u: &KatoField,
    phi: &SpectralField,
    p: &FracParams,
) -> Result<ContourIntegral> {
    let r = raw_contour_integral(c, u, phi, p)?;
    let k = 2.0 * p.beta();
    Ok(ContourIntegral { value: k * r.value, sliver: k * r.sliver, sliver_bound: k * r.sliver_bound })
}

/// Maximal intervals of constant `sgn(u)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignPiece {
    pub a: f64,
    pub b: f64,
    pub sign: i8,
}

fn sign_of(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Splits `[0, 2π)` into sign pieces of `u`, locating each change of sign
/// class by bisection. Isolated zeros give pieces of zero length.
pub fn sign_pieces(u: &KatoField) -> Vec<SignPiece> {
    let n = (16 * (2 * u.m.modes() + 1)).max(4096);
    let h = 2.0 * PI / n as f64;
    let class = |x: f64| sign_of(u.value(x));
    let mut pieces = Vec::new();
    let mut start = 0.0;
    let mut cur = class(0.0);
    for i in 0..n {
        let (x0, x1) = (i as f64 * h, (i + 1) as f64 * h);
        let c1 = class(x1);
        if c1 == class(x0) {
            continue;
        }
        // one change per sub-interval: find where the class of x0 ends
        let c0 = class(x0);
        let (mut lo, mut hi) = (x0, x1);
        for _ in 0..64 {
            let mid = 0.5 * (lo + hi);
            if class(mid) == c0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let cut = if c0 == 0 { lo } else { hi };
        pieces.push(SignPiece { a: start, b: cut, sign: cur });
        let cm = class(0.5 * (cut + x1));
        if cm != c1 {
            // passed through an isolated zero or another class on the way
            pieces.push(SignPiece { a: cut, b: cut, sign: 0 });
        }
        start = cut;
        cur = c1;
    }
    pieces.push(SignPiece { a: start, b: 2.0 * PI, sign: cur });
    pieces
}

/// `∫_a^b f` by composite 16-point Gauss-Legendre on panels no wider than `h`.
fn panel_integral(a: f64, b: f64, h: f64, gl: &Rule, mut f: impl FnMut(f64) -> f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let k = libm::ceil((b - a) / h).max(1.0) as usize;
    let w = (b - a) / k as f64;
    let mut acc = 0.0;
    for j in 0..k {
        acc += gl.mapped(a + j as f64 * w, a + (j + 1) as f64 * w).integrate(&mut f);
    }
    acc
}

/// `∫(Λ^s|u| - sgn(u)Λ^su)φ dx`, evaluated as `∫|u|Λ^sφ - ∫sgn(u)(Λ^su)φ`.
pub fn kato_lhs_weak(u: &KatoField, phi: &SpectralField, p: &FracParams) -> Result<f64> {
    let circ = u.circle();
    let lphi = frac_laplacian(&u.m, phi, p.s())?;
    let lu = frac_laplacian(&u.m, &u.coeffs, p.s())?;
    let gl = gauss_legendre(16)?;
    let h = PI / (2 * u.m.modes() + 2) as f64;
    let mut acc = 0.0;
    for piece in sign_pieces(u) {
        let sg = piece.sign as f64;
        acc += panel_integral(piece.a, piece.b, h, &gl, |x| {
            let abs_u = u.value(x).abs();
            abs_u * circ.eval(lphi.coeffs(), x) - sg * circ.eval(lu.coeffs(), x) * circ.eval(phi.coeffs(), x)
        });
    }
    Ok(acc)
}

/// `∫_{u=0} |Λ^su| φ dx` over the zero pieces of `u`.
pub fn kato_u_zero_term(u: &KatoField, phi: &SpectralField, p: &FracParams) -> Result<f64> {
    let circ = u.circle();
    let lu = frac_laplacian(&u.m, &u.coeffs, p.s())?;
    let gl = gauss_legendre(16)?;
    let h = PI / (2 * u.m.modes() + 2) as f64;
    Ok(sign_pieces(u)
        .into_iter()
        .filter(|q| q.sign == 0)
        .map(|q| panel_integral(q.a, q.b, h, &gl, |x| circ.eval(lu.coeffs(), x).abs() * circ.eval(phi.coeffs(), x)))
        .sum())
}

/// Scalar Kato report: weak left side against contour plus zero-set terms,
/// at relative tolerance [`KATO_TOL`]. For `φ ≥ 0` both right-hand terms
/// are checked to be nonnegative.
pub fn verify_kato(u: &KatoField, phi: &SpectralField, p: &FracParams, mesh: &KatoMesh) -> Result<IdentityReport> {
    let lhs = kato_lhs_weak(u, phi, p)?;
    let contour = extract_zero_contour(u, p, mesh)?;
    let ci = weighted_contour_integral(&contour, u, phi, p)?;
    let uz = kato_u_zero_term(u, phi, p)?;
    let mut r = IdentityReport::scalar("kato", ManifoldKind::Circle, p.s(), u.m.modes(), lhs, ci.value + uz, KATO_TOL);
    r.z_nodes = mesh.z.len();
    r.tail_error_estimate = ci.sliver_bound;
    let fine = u.m.refined(8 * u.m.grid_factor())?;
    if fine.synthesize(phi)?.min() >= 0.0 {
        r = r.with_check(Check::at_least("contour_term_nonnegative", ci.value, -1e-9)).with_check(Check::at_least(
            "u_zero_term_nonnegative",
            uz,
            -1e-9,
        ));
    }
    Ok(r.with_check(Check::info("contour_term", ci.value))
        .with_check(Check::info("u_zero_term", uz))
        .with_check(Check::info("sliver", ci.sliver))
        .with_check(Check::info("segments", contour.segments.len() as f64)))
}

/// Kato residuals on successive mesh levels with observed orders
/// `log2(r_{l}/r_{l+1})`. Residuals below `floor` count as converged.
#[derive(Debug, Clone, PartialEq)]
pub struct KatoConvergence {
    pub levels: Vec<usize>,
    pub residuals: Vec<f64>,
    pub orders: Vec<f64>,
    pub floor: f64,
}

impl KatoConvergence {
    /// Every step is either of order at least `min_order` or already at the floor.
    pub fn order_at_least(&self, min_order: f64) -> bool {
        self.orders.iter().zip(self.residuals.iter().skip(1)).all(|(&o, &r)| o >= min_order || r <= self.floor)
    }

    /// Least-squares slope of `-log2(residual)` against the level.
    pub fn fitted_order(&self) -> f64 {
        let n = self.levels.len() as f64;
        let x: Vec<f64> = self.levels.iter().map(|&l| l as f64).collect();
        let y: Vec<f64> = self.residuals.iter().map(|r| -libm::log2(r.max(f64::MIN_POSITIVE))).collect();
        let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
        sxy / sxx
    }
}

pub fn kato_convergence(
    u: &KatoField,
    phi: &SpectralField,
    p: &FracParams,
    levels: &[usize],
) -> Result<KatoConvergence> {
    let mut residuals = Vec::with_capacity(levels.len());
    let mut scale: f64 = 1.0;
    for &l in levels {
        let r = verify_kato(u, phi, p, &KatoMesh::level(p, l)?)?;
        scale = scale.max(r.lhs_mean.abs());
        residuals.push(r.residual_sup);
    }
    let orders = residuals.windows(2).map(|w| libm::log2(w[0] / w[1])).collect();
    Ok(KatoConvergence { levels: levels.to_vec(), residuals, orders, floor: 1e-10 * scale })
}

/// `F_φ(t) = β_s ∫_{U=t} |∇̄U| Φ z^{1-2s} dH¹` at one level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelValue {
    pub t: f64,
    pub value: f64,
    /// `false` when `t` lies outside the range of `U` on the mesh; the value is then 0.
    pub in_range: bool,
}

pub fn f_functional(
    u: &KatoField,
    phi: &SpectralField,
    p: &FracParams,
    mesh: &KatoMesh,
    t_grid: &[f64],
) -> Result<Vec<LevelValue>> {
    t_grid
        .iter()
        .map(|&t| {
            let c = extract_level_contour(u, p, mesh, t)?;
            let in_range = t > c.range.0 && t < c.range.1;
            let value = if in_range { p.beta() * raw_contour_integral(&c, u, phi, p)?.value } else { 0.0 };
            Ok(LevelValue { t, value, in_range })
        })
        .collect()
}
