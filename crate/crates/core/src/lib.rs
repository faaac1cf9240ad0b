//! Iterative compressive-sensing hybrid precoder/combiner design for
//! wideband mmWave MIMO-OFDM, with a seeded Monte Carlo harness.
//!
//! The pipeline: [`channel`] builds per-subcarrier channel matrices,
//! [`codebook`] supplies beam codebooks and angle dictionaries, [`sensing`]
//! simulates training and recovers effective channels, [`beamdesign`] selects
//! analog beams and the SVD baseband stage, and [`metrics`] scores the result.

pub mod beamdesign;
pub mod channel;
pub mod cli;
pub mod codebook;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod sensing;

pub use error::{Error, Result};
