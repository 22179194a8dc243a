//! Reduced quantum dynamics from tensor-network influence functionals.
//!
//! The crate builds the (1+1)-dimensional space-time tensor network of a
//! subsystem coupled to a bath, contracts it transversely (column by column,
//! along the spatial axis) into a compressed influence-functional matrix
//! product state, and contracts that against the subsystem's own evolution to
//! produce observable-vs-time series. Two models are built in: the spin-boson
//! model with a discretized Ohmic bath, and a 1D hard-core boson chain in a
//! harmonic trap. Direct Hilbert/Liouville time evolution and exact dense
//! propagation are provided as reference baselines.
//!
//! Module map:
//! - [`tensor`]: dense complex tensor kernels (contraction, truncated SVD, QR,
//!   matrix exponential),
//! - [`mps`]: matrix-product state/operator algebra (canonical forms,
//!   compression, MPO application, inner products),
//! - [`model`]: physical model builders (specs, bath discretization, thermal
//!   states, evolution rows),
//! - [`analytic`]: the closed-form spin-boson influence functional as an MPS,
//! - [`engine`]: transverse contraction, environment columns, and observable
//!   extraction,
//! - [`evolve`]: reference time evolution (HTE / LTE / dense),
//! - [`diag`]: compression reports, entanglement diagnostics, parameter sweeps.

extern crate blas_src;

pub mod analytic;
pub mod diag;
pub mod engine;
mod error;
pub mod evolve;
pub mod model;
pub mod mps;
pub mod tensor;

pub use error::{Error, Result};

/// Complex double-precision scalar used throughout.
pub type C64 = num_complex::Complex64;
