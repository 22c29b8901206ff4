//! Verification reports.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::Result;
use crate::manifold::{GridField, Manifold, ManifoldKind};

/// An auxiliary scalar assertion attached to a report.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `value <= threshold`.
    pub fn at_most(name: &str, value: f64, threshold: f64) -> Check {
        Check { name: name.into(), value, threshold, pass: value <= threshold }
    }

    /// Passes when `value >= threshold`.
    pub fn at_least(name: &str, value: f64, threshold: f64) -> Check {
        Check { name: name.into(), value, threshold, pass: value >= threshold }
    }

    /// Records a number without asserting anything about it.
    pub fn info(name: &str, value: f64) -> Check {
        Check { name: name.into(), value, threshold: f64::NAN, pass: true }
    }
}

/// Both sides of an identity on the grid of a manifold, with residual norms.
///
/// The main comparison passes iff `residual_sup <= tolerance · max(1, ‖lhs‖∞)`;
/// that product is stored as `threshold`. Every attached [`Check`] must pass
/// too for [`IdentityReport::pass`] to hold.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub identity: String,
    pub manifold: ManifoldKind,
    pub s: f64,
    pub modes: usize,
    pub z_nodes: usize,
    pub lhs: GridField,
    pub rhs: GridField,
    pub residual_sup: f64,
    pub residual_l2: f64,
    pub lhs_mean: f64,
    pub rhs_mean: f64,
    pub tolerance: f64,
    pub threshold: f64,
    pub tail_error_estimate: f64,
    pub checks: Vec<Check>,
}

impl IdentityReport {
    /// Builds a report from both sides; residual norms are taken on the grid of `m`.
    pub fn compare(
        identity: &str,
        m: &Manifold,
        s: f64,
        z_nodes: usize,
        lhs: GridField,
        rhs: GridField,
        tolerance: f64,
    ) -> Result<IdentityReport> {
        let r = lhs.sub(&rhs)?;
        let vol = m.kind().volume();
        Ok(IdentityReport {
            identity: identity.into(),
            manifold: m.kind(),
            s,
            modes: m.modes(),
            z_nodes,
            residual_sup: r.max_abs(),
            residual_l2: m.lp_norm(&r, 2.0)?,
            lhs_mean: m.integrate(&lhs)? / vol,
            rhs_mean: m.integrate(&rhs)? / vol,
            tolerance,
            threshold: tolerance * lhs.max_abs().max(1.0),
            tail_error_estimate: 0.0,
            checks: Vec::new(),
            lhs,
            rhs,
        })
    }

    /// Scalar identity, stored as one-point fields.
    pub fn scalar(
        identity: &str,
        kind: ManifoldKind,
        s: f64,
        modes: usize,
        lhs: f64,
        rhs: f64,
        tolerance: f64,
    ) -> Self {
        let r = (lhs - rhs).abs();
        IdentityReport {
            identity: identity.into(),
            manifold: kind,
            s,
            modes,
            z_nodes: 0,
            lhs: GridField::constant(1, lhs),
            rhs: GridField::constant(1, rhs),
            residual_sup: r,
            residual_l2: r,
            lhs_mean: lhs,
            rhs_mean: rhs,
            tolerance,
            threshold: tolerance * lhs.abs().max(1.0),
            tail_error_estimate: 0.0,
            checks: Vec::new(),
        }
    }

    pub fn with_check(mut self, c: Check) -> Self {
        self.checks.push(c);
        self
    }

    pub fn main_pass(&self) -> bool {
        self.residual_sup <= self.threshold
    }

    pub fn pass(&self) -> bool {
        self.main_pass() && self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}
