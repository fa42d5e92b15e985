//! Capacity analysis and IQ-aware precoding for MIMO links terminated by
//! Rydberg atomic receivers.
//!
//! The receiver measures field magnitudes, `y = |H x + r + w|`, against a
//! strong local-oscillator reference `r`. Under the strong-reference
//! linearization the link becomes a real-part detector with channel
//! `(H~_I, -H~_Q)`, and precoders that treat the in-phase and quadrature
//! baseband streams independently reach its capacity.
//!
//! Modules, bottom up:
//! - [`numerics`]: real/complex equivalences, SVD, water-filling, Procrustes.
//! - [`channel`]: Saleh-Valenzuela channels, LO references, SNR metrics.
//! - [`frontend`]: magnitude and linearized detectors, mutual information.
//! - [`precoding`]: IQ-aware and classical fully digital precoders, DoF.
//! - [`hybrid`]: fully- and sub-connected hybrid precoders.
//! - [`harness`]: seeded experiment runner behind the `atomic-mimo` CLI.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod error;
pub mod frontend;
pub mod harness;
pub mod hybrid;
pub mod numerics;
pub mod precoding;
pub mod rng;

pub use error::{Error, Result};
