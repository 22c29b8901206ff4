use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;

use super::pow2_at_least;
use crate::error::Result;
use crate::fft::Fft;
use crate::quad::gauss_legendre;

/// Unit sphere with real orthonormal spherical harmonics up to degree `L`.
///
/// Coefficient `l² + l + m` multiplies `Y_l^m`, where for `m > 0`
/// `Y_l^m = √2 P̄_l^m(cosθ) cos mφ`, `Y_l^{-m} = √2 P̄_l^m(cosθ) sin mφ` and
/// `P̄_l^m` is the associated Legendre function normalised to
/// `2π∫(P̄_l^m)² sinθ dθ = 1`, Condon-Shortley phase included.
///
/// The grid is Gauss-Legendre in `cosθ` times uniform in `φ`, so the poles
/// are never sampled.
#[derive(Debug, Clone)]
pub struct Sphere {
    l: usize,
    factor: usize,
    theta: Vec<f64>,
    n_lon: usize,
    fft: Fft,
    lat_weights: Vec<f64>,
    // per latitude, triangular (l, m ≥ 0) tables of P̄, dP̄/dθ, d²P̄/dθ²
    p: Vec<Vec<f64>>,
    dp: Vec<Vec<f64>>,
    d2p: Vec<Vec<f64>>,
    eig: Vec<f64>,
    weights: Vec<f64>,
}

#[inline]
fn tri(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

/// `P̄_l^m(cosθ)` for `0 ≤ m ≤ l ≤ lmax`, triangular layout.
pub fn normalized_legendre(lmax: usize, theta: f64) -> Vec<f64> {
    let (st, ct) = (libm::sin(theta), libm::cos(theta));
    let mut out = vec![0.0; tri(lmax, lmax) + 1];
    let mut pmm = 1.0 / libm::sqrt(4.0 * PI);
    for m in 0..=lmax {
        if m > 0 {
            pmm *= -libm::sqrt((2 * m + 1) as f64 / (2 * m) as f64) * st;
        }
        out[tri(m, m)] = pmm;
        if m < lmax {
            out[tri(m + 1, m)] = libm::sqrt((2 * m + 3) as f64) * ct * pmm;
        }
        for l in m + 2..=lmax {
            let (lf, mf) = (l as f64, m as f64);
            let a = libm::sqrt((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf));
            let b = libm::sqrt(((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0));
            out[tri(l, m)] = a * (ct * out[tri(l - 1, m)] - b * out[tri(l - 2, m)]);
        }
    }
    out
}

impl Sphere {
    pub(crate) fn new(l: usize, factor: usize) -> Result<Self> {
        let n_lat = factor * (l + 1);
        let n_lon = pow2_at_least(factor * (2 * l + 2));
        let gl = gauss_legendre(n_lat)?;
        // θ increasing
        let theta: Vec<f64> = gl.nodes.iter().rev().map(|&x| libm::acos(x)).collect();
        let lat_weights: Vec<f64> = gl.weights.iter().rev().copied().collect();
        let mut p = Vec::with_capacity(n_lat);
        let mut dp = Vec::with_capacity(n_lat);
        let mut d2p = Vec::with_capacity(n_lat);
        for &t in &theta {
            let (st, ct) = (libm::sin(t), libm::cos(t));
            let pt = normalized_legendre(l, t);
            let mut d1 = vec![0.0; pt.len()];
            let mut d2 = vec![0.0; pt.len()];
            for ll in 0..=l {
                for m in 0..=ll {
                    let (lf, mf) = (ll as f64, m as f64);
                    let prev = if ll > m { pt[tri(ll - 1, m)] } else { 0.0 };
                    let c = if ll > m {
                        libm::sqrt((2.0 * lf + 1.0) / (2.0 * lf - 1.0) * (lf * lf - mf * mf))
                    } else {
                        0.0
                    };
                    let v = pt[tri(ll, m)];
                    let dv = (lf * ct * v - c * prev) / st;
                    d1[tri(ll, m)] = dv;
                    d2[tri(ll, m)] = -ct / st * dv - (lf * (lf + 1.0) - mf * mf / (st * st)) * v;
                }
            }
            p.push(pt);
            dp.push(d1);
            d2p.push(d2);
        }
        let mut eig = Vec::with_capacity((l + 1) * (l + 1));
        for ll in 0..=l {
            for _ in 0..2 * ll + 1 {
                eig.push((ll * (ll + 1)) as f64);
            }
        }
        let dphi = 2.0 * PI / n_lon as f64;
        let mut weights = Vec::with_capacity(n_lat * n_lon);
        for w in &lat_weights {
            weights.extend(core::iter::repeat_n(w * dphi, n_lon));
        }
        Ok(Sphere { l, factor, theta, n_lon, fft: Fft::new(n_lon)?, lat_weights, p, dp, d2p, eig, weights })
    }

    pub fn modes(&self) -> usize {
        self.l
    }

    pub fn factor(&self) -> usize {
        self.factor
    }

    pub fn n_lat(&self) -> usize {
        self.theta.len()
    }

    pub fn n_lon(&self) -> usize {
        self.n_lon
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eig
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn node(&self, i: usize) -> [f64; 2] {
        [self.theta[i / self.n_lon], 2.0 * PI * (i % self.n_lon) as f64 / self.n_lon as f64]
    }

    /// Coefficient index of `Y_l^m`.
    pub fn index(l: usize, m: i64) -> usize {
        l * l + (m + l as i64) as usize
    }

    /// Synthesis of `∂_θ^a ∂_φ^b` with `a, b ≤ 2`.
    fn synth_with(&self, c: &[Complex64], a: usize, b: u32) -> Vec<f64> {
        let table = match a {
            0 => &self.p,
            1 => &self.dp,
            _ => &self.d2p,
        };
        let mut out = Vec::with_capacity(self.weights.len());
        let mut buf = vec![Complex64::new(0.0, 0.0); self.n_lon];
        for pt in table {
            buf.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
            for m in 0..=self.l {
                let (mut am, mut bm) = (0.0, 0.0);
                for ll in m..=self.l {
                    let v = pt[tri(ll, m)];
                    am += c[Self::index(ll, m as i64)].re * v;
                    if m > 0 {
                        bm += c[Self::index(ll, -(m as i64))].re * v;
                    }
                }
                // A cos mφ + B sin mφ = Re[(A - iB) e^{imφ}]; ∂_φ multiplies by im
                let mut f = Complex64::new(am, -bm) * Complex64::new(0.0, m as f64).powu(b);
                if m > 0 {
                    f *= SQRT_2;
                }
                buf[m] = f;
            }
            self.fft.inverse(&mut buf);
            out.extend(buf.iter().map(|z| z.re));
        }
        out
    }

    pub(crate) fn synthesize(&self, c: &[Complex64]) -> Vec<f64> {
        self.synth_with(c, 0, 0)
    }

    pub(crate) fn analyze(&self, g: &[f64]) -> Vec<Complex64> {
        let mut c = vec![Complex64::new(0.0, 0.0); self.eig.len()];
        let mut buf = vec![Complex64::new(0.0, 0.0); self.n_lon];
        let inv = 1.0 / self.n_lon as f64;
        for (j, row) in g.chunks(self.n_lon).enumerate() {
            for (b, &v) in buf.iter_mut().zip(row) {
                *b = Complex64::new(v, 0.0);
            }
            self.fft.forward(&mut buf);
            let w = 2.0 * PI * self.lat_weights[j];
            let pt = &self.p[j];
            for m in 0..=self.l {
                let (am, bm) =
                    if m == 0 { (buf[0].re * inv, 0.0) } else { (SQRT_2 * buf[m].re * inv, -SQRT_2 * buf[m].im * inv) };
                for ll in m..=self.l {
                    let v = w * pt[tri(ll, m)];
                    c[Self::index(ll, m as i64)].re += am * v;
                    if m > 0 {
                        c[Self::index(ll, -(m as i64))].re += bm * v;
                    }
                }
            }
        }
        c
    }

    fn inv_sin(&self) -> impl Iterator<Item = f64> + '_ {
        self.theta.iter().flat_map(move |&t| core::iter::repeat_n(1.0 / libm::sin(t), self.n_lon))
    }

    /// `(∂_θ u, (1/sinθ) ∂_φ u)`.
    pub(crate) fn gradient(&self, c: &[Complex64]) -> Vec<Vec<f64>> {
        let ut = self.synth_with(c, 1, 0);
        let up = self.synth_with(c, 0, 1);
        let up = up.iter().zip(self.inv_sin()).map(|(v, is)| v * is).collect();
        vec![ut, up]
    }

    /// Covariant Hessian norm in the orthonormal frame `(e_θ, e_φ/sinθ)`.
    pub(crate) fn hessian_sq_norm(&self, c: &[Complex64]) -> Vec<f64> {
        let ut = self.synth_with(c, 1, 0);
        let up = self.synth_with(c, 0, 1);
        let utt = self.synth_with(c, 2, 0);
        let utp = self.synth_with(c, 1, 1);
        let upp = self.synth_with(c, 0, 2);
        let mut out = Vec::with_capacity(ut.len());
        for (i, is) in self.inv_sin().enumerate() {
            let t = self.theta[i / self.n_lon];
            let (st, ct) = (libm::sin(t), libm::cos(t));
            let h_tt = utt[i];
            let h_tp = (utp[i] - ct / st * up[i]) * is;
            let h_pp = (upp[i] + st * ct * ut[i]) * is * is;
            out.push(h_tt * h_tt + 2.0 * h_tp * h_tp + h_pp * h_pp);
        }
        out
    }
}
