use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use super::pow2_at_least;
use crate::error::Result;
use crate::fft::Fft;

/// Circle of circumference `2π`: modes `e^{ikx}`, `|k| ≤ N`, on a uniform grid.
#[derive(Debug, Clone)]
pub struct Circle {
    n: usize,
    factor: usize,
    m: usize,
    fft: Fft,
    eig: Vec<f64>,
    weights: Vec<f64>,
}

impl Circle {
    pub(crate) fn new(n: usize, factor: usize) -> Result<Self> {
        let m = pow2_at_least(2 * n + 2) * pow2_at_least(factor);
        let eig = (0..2 * n + 1)
            .map(|i| {
                let k = i as f64 - n as f64;
                k * k
            })
            .collect();
        Ok(Circle { n, factor, m, fft: Fft::new(m)?, eig, weights: vec![2.0 * PI / m as f64; m] })
    }

    pub fn modes(&self) -> usize {
        self.n
    }

    pub fn factor(&self) -> usize {
        self.factor
    }

    pub fn grid_len(&self) -> usize {
        self.m
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eig
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn node(&self, i: usize) -> [f64; 2] {
        [2.0 * PI * i as f64 / self.m as f64, 0.0]
    }

    /// Coefficient index of wavenumber `k`.
    pub fn index(&self, k: i64) -> usize {
        (k + self.n as i64) as usize
    }

    pub fn wavenumber(&self, i: usize) -> i64 {
        i as i64 - self.n as i64
    }

    pub(crate) fn analyze(&self, g: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = g.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft.forward(&mut buf);
        let scale = 1.0 / self.m as f64;
        (0..2 * self.n + 1)
            .map(|i| {
                let k = self.wavenumber(i);
                buf[k.rem_euclid(self.m as i64) as usize] * scale
            })
            .collect()
    }

    fn synth_with(&self, c: &[Complex64], mult: impl Fn(i64) -> Complex64) -> Vec<f64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.m];
        for (i, ci) in c.iter().enumerate() {
            let k = self.wavenumber(i);
            buf[k.rem_euclid(self.m as i64) as usize] += ci * mult(k);
        }
        self.fft.inverse(&mut buf);
        buf.iter().map(|z| z.re).collect()
    }

    pub(crate) fn synthesize(&self, c: &[Complex64]) -> Vec<f64> {
        self.synth_with(c, |_| Complex64::new(1.0, 0.0))
    }

    /// `d^order/dx^order` of the field on the grid.
    pub fn derivative(&self, c: &[Complex64], order: u32) -> Vec<f64> {
        self.synth_with(c, |k| Complex64::new(0.0, k as f64).powu(order))
    }

    pub(crate) fn gradient(&self, c: &[Complex64]) -> Vec<Vec<f64>> {
        vec![self.derivative(c, 1)]
    }

    pub(crate) fn hessian_sq_norm(&self, c: &[Complex64]) -> Vec<f64> {
        self.derivative(c, 2).iter().map(|v| v * v).collect()
    }

    /// `d^order/dx^order` at an arbitrary point, by direct summation.
    pub fn eval_derivative(&self, c: &[Complex64], x: f64, order: u32) -> f64 {
        let mut acc = 0.0;
        for (i, ci) in c.iter().enumerate() {
            let k = self.wavenumber(i);
            let a = k as f64 * x;
            let e = Complex64::new(libm::cos(a), libm::sin(a)) * Complex64::new(0.0, k as f64).powu(order);
            acc += (ci * e).re;
        }
        acc
    }

    pub fn eval(&self, c: &[Complex64], x: f64) -> f64 {
        self.eval_derivative(c, x, 0)
    }
}
