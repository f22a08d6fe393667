//! Numerical laboratory for linear, periodically driven quantum
//! refrigerators and for the family of unattainability (third-law) bounds.
//!
//! The crate has two halves:
//!
//! * finite-dimensional thermodynamics ([`qstat`], [`bounds`]): thermal
//!   states, Rényi divergences, vacancy, worst-case work and the closed-form
//!   cooling bounds with brute-force verification oracles;
//! * driven harmonic networks ([`network`], [`floquet`], [`currents`],
//!   [`cooling`]): Green's-function coefficients of a periodically driven
//!   oscillator network, decomposed heat currents and single-oscillator
//!   cooling limits.
//!
//! Natural units ħ = k_B = 1 throughout; masses default to 1.

// Validation guards are written as !(x > 0.0) on purpose: the negated
// comparison rejects NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod linalg;
pub mod quad;
pub mod roots;

pub mod qstat;
pub mod bounds;
pub mod network;
pub mod floquet;
pub mod currents;
pub mod cooling;

pub use error::{CoreError, Result};
