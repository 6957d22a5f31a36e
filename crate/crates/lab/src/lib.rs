//! Dense-grid laboratory for semiclassical estimates on Schrödinger projectors.
//!
//! The crate discretizes `H = -ħ²Δ + V` on a periodic box, builds spectral
//! projectors and mean-field states, and audits commutator, Schatten, Weyl-law
//! and Agmon-type bounds against their semiclassical scaling in `ħ`.
//!
//! All arithmetic is `f64`/`Complex64`; operators are dense matrices on the
//! flattened grid.

// Guards are written `!(x > 0.0)` on purpose: they reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod experiments;
pub mod grid_core;
pub mod linalg;
pub mod meanfield;
pub mod operators;
pub mod phasespace;
pub mod schatten;
pub mod spectral;

mod fourier;

pub use error::{LabError, Result};
pub use num_complex::Complex64;

/// Dense complex matrix on the flattened grid.
pub type Matrix = nalgebra::DMatrix<Complex64>;
/// Dense real matrix on the flattened grid.
pub type RealMatrix = nalgebra::DMatrix<f64>;

/// Planck constant `h = 2πħ`.
pub fn planck(hbar: f64) -> f64 {
    2.0 * std::f64::consts::PI * hbar
}

/// Phase-space volume factor `h^d`.
pub fn planck_volume(hbar: f64, dim: usize) -> f64 {
    planck(hbar).powi(dim as i32)
}
