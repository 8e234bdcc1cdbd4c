//! Link-level simulator for RIS-assisted SISO links in sub-6 GHz bands.
//!
//! Channels are generated with a 3D geometry-based stochastic model in indoor
//! hotspot (InH) and urban microcell (UMi) environments:
//!
//! - `h`: Tx to RIS, clustered multipath projected onto the RIS steering vector
//! - `g`: RIS to Rx, either the same far-field procedure or a deterministic
//!   near-field LOS model with exact per-element aperture gain
//! - `h_siso`: direct Tx to Rx link
//!
//! The RIS phases are set to coherently combine every reflected path with the
//! direct link, and the achievable rate `log2(1 + snr)` is estimated by Monte
//! Carlo over seeded trials.

pub mod array;
pub mod channel;
pub mod cli;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod largescale;
pub mod link;
pub mod oracles;
pub mod rng;
pub mod smallscale;

pub use error::{Error, Result};
pub use num_complex::Complex64;
