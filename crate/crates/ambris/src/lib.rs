//! Deterministic link-level simulator for ambient backscatter communication
//! assisted by a reconfigurable intelligent surface (RIS).
//!
//! A passive tag toggles between a transparent and a backscattering state to
//! modulate the waves of an ambient source towards a reader. The reader runs
//! a non-coherent energy detector, so its bit error rate is set by the
//! amplitude contrast between the two tag states. An RIS close to the scene
//! reshapes the propagation channel with a codebook of near-field focusing
//! beams plus a common phase shift applied to all cells, and an exhaustive
//! search over (beam, phase-shift) pairs picks the combination that maximizes
//! that contrast.
//!
//! The crate is organized along the simulation pipeline:
//!
//! - [`propagation`] — scene geometry and complex channel coefficients for
//!   every single-hop path, composed into the end-to-end coefficient for
//!   both tag states.
//! - [`codebook`] — RIS array geometry, spherical-wave focusing beams for a
//!   grid of target locations, and the common phase-shift grid.
//! - [`metrics`] — amplitude contrast, energy-detector BER, closed-form
//!   optimal phase shifts, and beam-regime classification.
//! - [`search`] — full (beam x phase) grid evaluation and a simulated
//!   controller/reader feedback protocol with quantized contrast reports.
//! - [`fieldmap`] — spatial maps of the RIS-reflected signal strength in dB.
//! - [`cli`] — JSON run configuration and the batch commands behind the
//!   `ambris` binary.
//!
//! All computations are pure functions of their inputs; identical inputs
//! produce bit-identical outputs regardless of worker count.

pub mod cli;
pub mod codebook;
mod error;
pub mod fieldmap;
pub(crate) mod fmt;
pub mod metrics;
pub mod propagation;
pub mod search;
#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
pub use num_complex::Complex64;
