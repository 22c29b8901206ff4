//! Spectral fractional Laplacian on explicit compact manifolds.
//!
//! The crate works on the circle, the flat torus and the unit sphere. Every
//! field is band-limited and stored by its eigen-coefficients of `-Δ`, so the
//! fractional operator `Λ^s = -(-Δ)^s`, the fractional Poisson semigroup and
//! the Caffarelli-Silvestre extension are all exact diagonal multipliers.
//! On top of that sit a weighted quadrature in the extension variable, a
//! Duhamel-type assembler, and verifiers that compare spectral left-hand sides
//! against extension averages for the carré du champ, Bochner, Córdoba-Córdoba,
//! Stroock-Varopoulos and Kato identities.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![forbid(unsafe_code)]
// `!(x > 0.0)` style guards are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod duhamel;
pub mod error;
pub mod fft;
pub mod kato;
pub mod manifold;
pub mod operators;
pub mod quad;
pub mod report;
pub mod special;
pub mod verify;
pub mod zquad;

pub use crate::error::{Error, Result};
pub use crate::manifold::{GridField, Manifold, ManifoldKind, SpectralField};
pub use crate::report::{Check, IdentityReport};
pub use crate::special::FracParams;
pub use crate::zquad::{WeightClass, ZRule, ZRules};
