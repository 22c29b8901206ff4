//! Quadrature for `∫₀^∞ g(z) z^{1-2s} dz`.
//!
//! The slices of an extension behave like power series in `z` and `z^{2s}`
//! near the boundary and decay like `e^{-z√λ₁}` far from it. A rule is made
//! of three parts:
//!
//! * a Gauss-Jacobi head on `[0, z₀]` that is exact for the leading endpoint
//!   power of its [`WeightClass`],
//! * geometrically graded Gauss-Legendre panels from `z₀` up to `z_split`,
//!   which resolve the mixed `z^{2s}` powers and every mode scale
//!   `1/√λ_k` in between,
//! * Gauss-Legendre panels growing by a fixed ratio, capped in length, from
//!   `z_split` to `z_max`.
//!
//! Weights always include `z^{1-2s}`, so samples are the bare `g(z_i)` for
//! either class and the two rules can be compared on the same integrand.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::quad::{gauss_jacobi_left, gauss_legendre};
use crate::special::FracParams;

/// Endpoint behaviour of an integrand `g(z) z^{1-2s}` near `z = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WeightClass {
    /// `g` bounded: horizontal gradients, `U` itself. Leading power `z^{1-2s}`.
    Horizontal,
    /// `g ~ z^{4s-2}`: products of two `∂_z` factors. Leading power `z^{2s-1}`.
    Vertical,
}

impl WeightClass {
    /// Exponent of the Jacobi weight used on the head. The vertical head
    /// takes the more singular of `z^{2s-1}` and `z^{1-2s}` so that it stays
    /// accurate on horizontal integrands as well.
    pub fn alpha(self, s: f64) -> f64 {
        match self {
            WeightClass::Horizontal => 1.0 - 2.0 * s,
            WeightClass::Vertical => (2.0 * s - 1.0).min(1.0 - 2.0 * s),
        }
    }
}

/// Construction parameters of a [`ZRule`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZRuleParams {
    /// Smallest nonzero eigenvalue; sets the decay rate of the tail.
    pub lambda_min: f64,
    /// Largest eigenvalue present; sets the finest scale near `z = 0`.
    pub lambda_max: f64,
    /// Target absolute accuracy for unit-size integrands.
    pub tol: f64,
    /// Gauss-Legendre points per panel.
    pub order: usize,
}

impl ZRuleParams {
    pub fn new(lambda_min: f64, lambda_max: f64, tol: f64) -> Self {
        ZRuleParams { lambda_min, lambda_max, tol, order: 10 }
    }

    pub fn with_order(mut self, order: usize) -> Self {
        self.order = order;
        self
    }
}

const GRADING_RATIO: f64 = 2.5;
const HEAD_EPS: f64 = 1e-2;
const HEAD_POINTS: usize = 12;
/// Extra tail length in units of `1/√λ₁`, covering polynomial prefactors.
const TAIL_MARGIN: f64 = 6.0;
/// Growth of tail panels beyond the split.
const TAIL_RATIO: f64 = 1.6;
/// Cap on tail panel length in units of `1/√λ₁`.
const TAIL_PANEL: f64 = 4.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ZRule {
    s: f64,
    class: WeightClass,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    z_head: f64,
    z_split: f64,
    z_max: f64,
    est_tail_error: f64,
}

impl ZRule {
    pub fn build(p: &FracParams, class: WeightClass, params: ZRuleParams) -> Result<ZRule> {
        let ZRuleParams { lambda_min, lambda_max, tol, order } = params;
        if !(lambda_min > 0.0) || !lambda_min.is_finite() {
            return Err(Error::Domain { what: "smallest nonzero eigenvalue", value: lambda_min });
        }
        if !(tol > 1e-14 && tol < 1e-2) {
            return Err(Error::Domain { what: "z-quadrature tolerance", value: tol });
        }
        if order < 2 {
            return Err(Error::InvalidInput(alloc::format!("panel order {order} below 2")));
        }
        let s = p.s();
        let lambda_max = lambda_max.max(lambda_min);
        let alpha = class.alpha(s);
        let gap = 1.0 - 2.0 * s - alpha;
        let r_min = libm::sqrt(lambda_min);
        let r_max = libm::sqrt(lambda_max);

        // Head error ~ ε z₀^{head_exp}, ε the Gauss-Jacobi error on a
        // non-integer power offset. The horizontal head first misses the z¹
        // term; the vertical head misses the other endpoint family at
        // z^{|2s-1|}.
        let head_exp = match class {
            WeightClass::Horizontal => 2.0,
            WeightClass::Vertical => 1.0 + (2.0 * s - 1.0).abs(),
        };
        let z_head = (libm::pow(0.5 * tol / HEAD_EPS, 1.0 / head_exp) / r_max).clamp(1e-16 / r_max, 1e-2 / r_max);
        let z_split = 1.0 / r_min;
        let weight_exp = 1.0 - 2.0 * s;
        // ∫_{z_max}^∞ z^{1-2s} e^{-z√λ₁} dz for a unit-size integrand
        let tail_at = |z: f64| libm::pow(z, weight_exp) * libm::exp(-z * r_min) / r_min;
        let mut z_max = libm::log(1.0 / tol) / r_min + TAIL_MARGIN / r_min;
        while tail_at(z_max) > 0.5 * tol {
            z_max += 1.0 / r_min;
        }

        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        let head = gauss_jacobi_left(HEAD_POINTS, alpha, z_head)?;
        for (&z, &w) in head.nodes.iter().zip(&head.weights) {
            nodes.push(z);
            weights.push(w * libm::pow(z, gap));
        }

        let gl = gauss_legendre(order)?;
        let mut push_panel = |a: f64, b: f64| {
            let r = gl.mapped(a, b);
            for (&z, &w) in r.nodes.iter().zip(&r.weights) {
                nodes.push(z);
                weights.push(w * libm::pow(z, weight_exp));
            }
        };
        let mut a = z_head;
        while a < z_split {
            let b = (a * GRADING_RATIO).min(z_split);
            // avoid a sliver panel at the split
            let b = if b * libm::sqrt(GRADING_RATIO) > z_split { z_split } else { b };
            push_panel(a, b);
            a = b;
        }
        // geometric growth from the split, capped where the decay sets the scale
        let mut a = z_split;
        while a < z_max {
            let b = (a * TAIL_RATIO).min(a + TAIL_PANEL / r_min).min(z_max);
            let b = if z_max - b < 0.25 * (b - a) { z_max } else { b };
            push_panel(a, b);
            a = b;
        }

        let tail = tail_at(z_max);
        let head_err = libm::pow(z_head * r_max, head_exp) * HEAD_EPS;
        Ok(ZRule { s, class, nodes, weights, z_head, z_split, z_max, est_tail_error: tail + head_err })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn class(&self) -> WeightClass {
        self.class
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Weights including `z^{1-2s}`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn z_head(&self) -> f64 {
        self.z_head
    }

    pub fn z_split(&self) -> f64 {
        self.z_split
    }

    pub fn z_max(&self) -> f64 {
        self.z_max
    }

    /// Truncation estimate for unit-size integrands: the neglected tail
    /// beyond `z_max` and the first power the head does not capture.
    pub fn est_tail_error(&self) -> f64 {
        self.est_tail_error
    }

    /// `Σ w_i g(z_i)` for samples aligned with [`nodes`](Self::nodes).
    pub fn integrate(&self, samples: &[f64]) -> Result<f64> {
        if samples.len() != self.nodes.len() {
            return Err(Error::ResolutionMismatch { expected: self.nodes.len(), found: samples.len() });
        }
        Ok(self.weights.iter().zip(samples).map(|(w, g)| w * g).sum())
    }

    pub fn integrate_fn(&self, mut g: impl FnMut(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&z, &w)| w * g(z)).sum()
    }
}

/// The pair of rules used by split assembly.
#[derive(Debug, Clone, PartialEq)]
pub struct ZRules {
    pub horizontal: ZRule,
    pub vertical: ZRule,
}

impl ZRules {
    pub fn build(p: &FracParams, params: ZRuleParams) -> Result<ZRules> {
        Ok(ZRules {
            horizontal: ZRule::build(p, WeightClass::Horizontal, params)?,
            vertical: ZRule::build(p, WeightClass::Vertical, params)?,
        })
    }

    pub fn get(&self, class: WeightClass) -> &ZRule {
        match class {
            WeightClass::Horizontal => &self.horizontal,
            WeightClass::Vertical => &self.vertical,
        }
    }

    pub fn total_nodes(&self) -> usize {
        self.horizontal.len() + self.vertical.len()
    }

    pub fn est_tail_error(&self) -> f64 {
        self.horizontal.est_tail_error.max(self.vertical.est_tail_error)
    }
}

/// Horizontal rule for `∫₀^∞ g z^{1-2s} dz` with default panel order and the
/// finest scale taken equal to the coarsest.
pub fn build_rule(p: &FracParams, lambda_min_nonzero: f64, tol: f64) -> Result<ZRule> {
    ZRule::build(p, WeightClass::Horizontal, ZRuleParams::new(lambda_min_nonzero, lambda_min_nonzero, tol))
}

pub fn integrate(rule: &ZRule, samples: &[f64]) -> Result<f64> {
    rule.integrate(samples)
}
