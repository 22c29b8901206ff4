use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use super::pow2_at_least;
use crate::error::Result;
use crate::fft::Fft;

/// Flat torus `[0, 2π)²`: modes `e^{i(k₁x + k₂y)}`, `|k₁|, |k₂| ≤ N`, on an
/// `M × M` grid stored row-major in `x`.
#[derive(Debug, Clone)]
pub struct Torus {
    n: usize,
    factor: usize,
    m: usize,
    fft: Fft,
    eig: Vec<f64>,
    weights: Vec<f64>,
}

impl Torus {
    pub(crate) fn new(n: usize, factor: usize) -> Result<Self> {
        let m = pow2_at_least(2 * n + 2) * pow2_at_least(factor);
        let side = 2 * n + 1;
        let mut eig = Vec::with_capacity(side * side);
        for a in 0..side {
            for b in 0..side {
                let k1 = a as f64 - n as f64;
                let k2 = b as f64 - n as f64;
                eig.push(k1 * k1 + k2 * k2);
            }
        }
        let w = (2.0 * PI / m as f64) * (2.0 * PI / m as f64);
        Ok(Torus { n, factor, m, fft: Fft::new(m)?, eig, weights: vec![w; m * m] })
    }

    pub fn modes(&self) -> usize {
        self.n
    }

    pub fn factor(&self) -> usize {
        self.factor
    }

    pub fn grid_side(&self) -> usize {
        self.m
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eig
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn node(&self, i: usize) -> [f64; 2] {
        let h = 2.0 * PI / self.m as f64;
        [h * (i / self.m) as f64, h * (i % self.m) as f64]
    }

    pub fn index(&self, k1: i64, k2: i64) -> usize {
        let side = 2 * self.n as i64 + 1;
        ((k1 + self.n as i64) * side + k2 + self.n as i64) as usize
    }

    fn wavenumbers(&self, i: usize) -> (i64, i64) {
        let side = 2 * self.n + 1;
        ((i / side) as i64 - self.n as i64, (i % side) as i64 - self.n as i64)
    }

    fn fft2(&self, buf: &mut [Complex64], inverse: bool) {
        let m = self.m;
        let run = |row: &mut [Complex64]| {
            if inverse {
                self.fft.inverse(row)
            } else {
                self.fft.forward(row)
            }
        };
        for row in buf.chunks_mut(m) {
            run(row);
        }
        let mut col = vec![Complex64::new(0.0, 0.0); m];
        for j in 0..m {
            for i in 0..m {
                col[i] = buf[i * m + j];
            }
            run(&mut col);
            for i in 0..m {
                buf[i * m + j] = col[i];
            }
        }
    }

    fn slot(&self, k1: i64, k2: i64) -> usize {
        let m = self.m as i64;
        (k1.rem_euclid(m) * m + k2.rem_euclid(m)) as usize
    }

    pub(crate) fn analyze(&self, g: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = g.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft2(&mut buf, false);
        let scale = 1.0 / (self.m * self.m) as f64;
        (0..self.eig.len())
            .map(|i| {
                let (k1, k2) = self.wavenumbers(i);
                buf[self.slot(k1, k2)] * scale
            })
            .collect()
    }

    fn synth_with(&self, c: &[Complex64], mult: impl Fn(i64, i64) -> Complex64) -> Vec<f64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.m * self.m];
        for (i, ci) in c.iter().enumerate() {
            let (k1, k2) = self.wavenumbers(i);
            buf[self.slot(k1, k2)] += ci * mult(k1, k2);
        }
        self.fft2(&mut buf, true);
        buf.iter().map(|z| z.re).collect()
    }

    pub(crate) fn synthesize(&self, c: &[Complex64]) -> Vec<f64> {
        self.synth_with(c, |_, _| Complex64::new(1.0, 0.0))
    }

    /// `∂_x^a ∂_y^b` of the field on the grid.
    pub fn partial(&self, c: &[Complex64], a: u32, b: u32) -> Vec<f64> {
        self.synth_with(c, |k1, k2| Complex64::new(0.0, k1 as f64).powu(a) * Complex64::new(0.0, k2 as f64).powu(b))
    }

    pub(crate) fn gradient(&self, c: &[Complex64]) -> Vec<Vec<f64>> {
        vec![self.partial(c, 1, 0), self.partial(c, 0, 1)]
    }

    pub(crate) fn hessian_sq_norm(&self, c: &[Complex64]) -> Vec<f64> {
        let xx = self.partial(c, 2, 0);
        let xy = self.partial(c, 1, 1);
        let yy = self.partial(c, 0, 2);
        xx.iter().zip(&xy).zip(&yy).map(|((a, b), d)| a * a + 2.0 * b * b + d * d).collect()
    }
}
