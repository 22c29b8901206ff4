//! Iterative radix-2 complex FFT.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Precomputed twiddles and bit-reversal table for one power-of-two length.
#[derive(Debug, Clone)]
pub struct Fft {
    n: usize,
    twiddles: Vec<Complex64>,
    rev: Vec<usize>,
}

impl Fft {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::InvalidInput(alloc::format!("FFT length {n} is not a power of two")));
        }
        let bits = n.trailing_zeros();
        let rev = (0..n).map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) }).collect();
        let twiddles = (0..n / 2)
            .map(|k| {
                let a = -2.0 * PI * k as f64 / n as f64;
                Complex64::new(libm::cos(a), libm::sin(a))
            })
            .collect();
        Ok(Fft { n, twiddles, rev })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// In place `X_k = Σ_j x_j e^{-2πijk/n}`.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, false);
    }

    /// In place `x_j = Σ_k X_k e^{+2πijk/n}` (no `1/n`).
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, true);
    }

    fn run(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.n;
        debug_assert_eq!(data.len(), n);
        for i in 0..n {
            let j = self.rev[i];
            if i < j {
                data.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let step = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..len / 2 {
                    let mut w = self.twiddles[k * step];
                    if inverse {
                        w = w.conj();
                    }
                    let a = data[start + k];
                    let b = data[start + k + len / 2] * w;
                    data[start + k] = a + b;
                    data[start + k + len / 2] = a - b;
                }
            }
            len <<= 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn matches_direct_dft() {
        let n = 16;
        let fft = Fft::new(n).unwrap();
        let x: Vec<Complex64> =
            (0..n).map(|j| Complex64::new(libm::sin(j as f64 * 0.7) + 0.1 * j as f64, libm::cos(j as f64))).collect();
        let mut y = x.clone();
        fft.forward(&mut y);
        for (k, yk) in y.iter().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, xj) in x.iter().enumerate() {
                let a = -2.0 * PI * (j * k) as f64 / n as f64;
                acc += xj * Complex64::new(libm::cos(a), libm::sin(a));
            }
            assert!((acc - yk).norm() < 1e-12);
        }
        fft.inverse(&mut y);
        for j in 0..n {
            assert!((y[j] / n as f64 - x[j]).norm() < 1e-13);
        }
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert!(Fft::new(12).is_err());
        let one = Fft::new(1).unwrap();
        let mut d = vec![Complex64::new(2.0, 0.0)];
        one.forward(&mut d);
        assert_eq!(d[0].re, 2.0);
    }
}
