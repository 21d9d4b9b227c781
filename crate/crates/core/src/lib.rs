//! Angle-of-arrival estimation from 5G NR sounding reference signals on a
//! small uniform linear array.
//!
//! The crate covers the whole chain: SRS waveform synthesis, geometric
//! multipath and receiver impairments, timing and SINR measurement,
//! subspace estimators (MUSIC, ESPRIT, joint angle-delay ESPRIT), the
//! per-slot receiver with outlier rejection, and a Monte-Carlo campaign
//! harness.

pub mod campaign;
pub mod channel;
pub mod receiver;
pub mod error;
pub mod stats;
pub mod subspace;
pub mod sync;
pub mod waveform;

pub use error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
