//! Scalar special functions: Gamma, real-order modified Bessel `K_ν`, the
//! extension constant `β_s` and the fractional Poisson multiplier `θ_s`.

use core::f64::consts::PI;

use crate::error::{domain, Result};

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Taylor coefficients of `1/Γ(z)` around `z = 0`; `RECIP_GAMMA[k]` multiplies `z^(k+1)`.
const RECIP_GAMMA: [f64; 26] = [
    1.0,
    0.577_215_664_901_532_9,
    -0.655_878_071_520_253_8,
    -0.042_002_635_034_095_2,
    0.166_538_611_382_291_5,
    -0.042_197_734_555_544_3,
    -0.009_621_971_527_877_0,
    0.007_218_943_246_663_0,
    -0.001_165_167_591_859_1,
    -0.000_215_241_674_114_9,
    0.000_128_050_282_388_2,
    -0.000_020_134_854_780_7,
    -0.000_001_250_493_482_1,
    0.000_001_133_027_232_0,
    -0.000_000_205_633_841_7,
    0.000_000_006_116_095_0,
    0.000_000_005_002_007_5,
    -0.000_000_001_181_274_6,
    0.000_000_000_104_342_7,
    0.000_000_000_007_782_3,
    -0.000_000_000_003_696_8,
    0.000_000_000_000_510_0,
    -0.000_000_000_000_020_6,
    -0.000_000_000_000_005_4,
    0.000_000_000_000_001_4,
    0.000_000_000_000_000_1,
];

/// Gamma function for positive arguments (Lanczos, g = 7).
pub fn gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(domain("gamma argument", x));
    }
    Ok(gamma_pos(x))
}

fn gamma_pos(x: f64) -> f64 {
    if x < 0.5 {
        return gamma_pos(x + 1.0) / x;
    }
    let x = x - 1.0;
    let t = x + LANCZOS_G + 0.5;
    let mut a = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    // t^(x+1/2) e^(-t) split in two halves so that x ~ 170 does not overflow early
    let half = libm::pow(t, 0.5 * (x + 0.5));
    libm::sqrt(2.0 * PI) * half * (half * libm::exp(-t)) * a
}

/// `1/Γ(1+μ)` and `1/Γ(1-μ)` together with Temme's `γ₁(μ)`, `γ₂(μ)`, for `|μ| ≤ 1/2`.
fn temme_gammas(mu: f64) -> (f64, f64, f64, f64) {
    let mut plus = 0.0; // 1/Γ(1+μ) = Σ c_k μ^(k-1)
    let mut minus = 0.0; // 1/Γ(1-μ) = Σ c_k (-μ)^(k-1)
    let mut g1 = 0.0;
    let mut g2 = 0.0;
    let mut pw = 1.0;
    let mut prev = 0.0;
    for (k, c) in RECIP_GAMMA.iter().enumerate() {
        // c multiplies μ^k here, k counted from 0
        let term = c * pw;
        plus += term;
        if k % 2 == 0 {
            minus += term;
            g2 += term;
        } else {
            minus -= term;
            // (1/Γ(1-μ) - 1/Γ(1+μ)) / (2μ) keeps the odd powers, shifted down by one
            g1 -= c * prev;
        }
        prev = pw;
        pw *= mu;
    }
    (g1, g2, plus, minus)
}

/// Temme's series for `K_μ(x)` and `K_{μ+1}(x)`, `|μ| ≤ 1/2`, `0 < x ≤ 2`.
fn bessel_k_temme(mu: f64, x: f64) -> (f64, f64) {
    let (gam1, gam2, gampl, gammi) = temme_gammas(mu);
    let x2 = 0.5 * x;
    let pimu = PI * mu;
    let fact = if pimu.abs() < 1e-15 { 1.0 } else { pimu / libm::sin(pimu) };
    let d = -libm::log(x2);
    let e = mu * d;
    let fact2 = if e.abs() < 1e-15 { 1.0 } else { libm::sinh(e) / e };
    let mut ff = fact * (gam1 * libm::cosh(e) + gam2 * fact2 * d);
    let mut sum = ff;
    let e = libm::exp(e);
    let mut p = 0.5 * e / gampl;
    let mut q = 0.5 / (e * gammi);
    let mut c = 1.0;
    let dd = x2 * x2;
    let mut sum1 = p;
    let mu2 = mu * mu;
    for i in 1..200 {
        let fi = i as f64;
        ff = (fi * ff + p + q) / (fi * fi - mu2);
        c *= dd / fi;
        p /= fi - mu;
        q /= fi + mu;
        let del = c * ff;
        sum += del;
        let del1 = c * (p - fi * ff);
        sum1 += del1;
        if del.abs() < sum.abs() * 1e-17 && del1.abs() < sum1.abs() * 1e-17 {
            break;
        }
    }
    (sum, sum1 * 2.0 / x)
}

/// `e^r K_ν(r)` from `∫₀^∞ e^{-r(cosh t - 1)} cosh(νt) dt`, trapezoidal in `t`.
///
/// The integrand decays double exponentially, so the plain trapezoidal sum is
/// already a double-exponential rule.
fn bessel_k_scaled_integral(nu: f64, r: f64) -> f64 {
    const H: f64 = 0.05;
    let mut sum = 0.5;
    let mut j = 1;
    loop {
        let t = j as f64 * H;
        let arg = r * (libm::cosh(t) - 1.0);
        if arg > 50.0 {
            break;
        }
        sum += libm::exp(-arg) * libm::cosh(nu * t);
        j += 1;
    }
    sum * H
}

const BESSEL_SPLIT: f64 = 2.0;

/// Modified Bessel function of the second kind `K_ν(r)` for real `|ν| < 1`, `r > 0`.
pub fn bessel_k(nu: f64, r: f64) -> Result<f64> {
    if !(nu.abs() < 1.0) {
        return Err(domain("bessel_k order", nu));
    }
    if !(r > 0.0) || r.is_nan() {
        return Err(domain("bessel_k argument", r));
    }
    Ok(bessel_k_unchecked(nu.abs(), r))
}

fn bessel_k_unchecked(nu: f64, r: f64) -> f64 {
    if r.is_infinite() {
        return 0.0;
    }
    if r < BESSEL_SPLIT {
        if nu <= 0.5 {
            bessel_k_temme(nu, r).0
        } else {
            bessel_k_temme(nu - 1.0, r).1
        }
    } else {
        bessel_k_scaled_integral(nu, r) * libm::exp(-r)
    }
}

/// Small-argument branch only; exposed so tests can measure the branch overlap.
#[doc(hidden)]
pub fn bessel_k_series_branch(nu: f64, r: f64) -> f64 {
    if nu <= 0.5 {
        bessel_k_temme(nu, r).0
    } else {
        bessel_k_temme(nu - 1.0, r).1
    }
}

/// Large-argument branch only; exposed so tests can measure the branch overlap.
#[doc(hidden)]
pub fn bessel_k_integral_branch(nu: f64, r: f64) -> f64 {
    bessel_k_scaled_integral(nu, r) * libm::exp(-r)
}

/// The order `s` of the fractional Laplacian together with its derived constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracParams {
    s: f64,
    beta: f64,
    /// `2^{1-s} / Γ(s)`, the normalisation of `θ_s`.
    theta_norm: f64,
}

impl FracParams {
    /// Builds the parameters for `s ∈ (0, 1)`; `β_s = 2^{2s-1} Γ(s) / Γ(1-s)`.
    pub fn new(s: f64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(domain("fractional order s", s));
        }
        let gs = gamma_pos(s);
        let g1s = gamma_pos(1.0 - s);
        let beta = libm::exp2(2.0 * s - 1.0) * gs / g1s;
        Ok(FracParams { s, beta, theta_norm: libm::exp2(1.0 - s) / gs })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `θ_s(r) = 2^{1-s}/Γ(s) r^s K_s(r)`, the symbol of the fractional Poisson
    /// operator at `r = z √λ`. Exactly 1 at `r = 0`.
    pub fn theta(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 1.0;
        }
        self.theta_norm * libm::pow(r, self.s) * bessel_k_unchecked(self.s, r)
    }

    /// `θ_s'(r) = -2^{1-s}/Γ(s) r^s K_{1-s}(r)`.
    pub fn theta_deriv(&self, r: f64) -> f64 {
        -self.theta_norm * libm::pow(r, self.s) * bessel_k_unchecked(1.0 - self.s, r)
    }
}

/// Free-function form of [`FracParams::new`].
pub fn make_frac_params(s: f64) -> Result<FracParams> {
    FracParams::new(s)
}

/// `θ_s(r)`; errors for negative `r`.
pub fn poisson_multiplier(p: &FracParams, r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(domain("poisson multiplier argument", r));
    }
    Ok(p.theta(r))
}

/// `dθ_s/dr`; errors unless `r > 0`.
pub fn poisson_multiplier_deriv(p: &FracParams, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(domain("poisson multiplier derivative argument", r));
    }
    Ok(p.theta_deriv(r))
}
