//! Casimir pressure in planar cavities filled with stratified, diagonal
//! anisotropic media, evaluated on the imaginary frequency axis.
//!
//! The pipeline runs from material descriptions ([`materials`]) through
//! per-slab eigenmodes ([`wavesolver`]) and 4×4 transfer matrices
//! ([`transfer`]) to the stress-tensor integral ([`stress`]). Units are
//! natural: `ħ = c = 1`, lengths in units of the cavity width where
//! convenient.

// `!(a < b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod materials;
pub mod quadrature;
pub mod stress;
pub mod transfer;
pub mod wavesolver;

pub use error::{Error, Result};
