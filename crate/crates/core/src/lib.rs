//! Link-level Monte Carlo simulator for limited-feedback MIMO unitary
//! precoding with rotating codebooks.
//!
//! The receiver picks a precoder from a small codebook and feeds back its
//! index. With rotating codebooks, `K` child codebooks of a larger mother
//! codebook are cycled slot by slot, and one index per slot is reserved to
//! mean "keep the matrix in use". Over a rotation period the link can reach
//! any entry of the mother codebook while each message still carries only
//! `L` bits.
//!
//! Modules, bottom-up:
//!
//! - [`codebook`]: seeded unitary codebooks, mother/child splitting, altered views.
//! - [`channel`]: Doppler, Bessel correlation, AR(1) Rayleigh channel process.
//! - [`precoding`]: log-det capacity, codebook selection, SVD-optimal precoder.
//! - [`protocol`]: rotation and puncture schedules, feedback pipeline, link state.
//! - [`harness`]: drop simulation, sweeps, effective-bits analysis, CSV and CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod codebook;
mod error;
pub mod harness;
pub mod linalg;
pub mod precoding;
pub mod protocol;
pub mod seeds;

pub use error::{Error, Result};
pub use linalg::CMatrix;
