//! SRS pilot generation, comb mapping and OFDM modulation.
//!
//! The FFT is unitary in both directions, so body energy in time equals
//! grid energy. Subcarriers are centred on DC: grid subcarrier
//! `n_subcarriers / 2` lands on bin 0.

mod config;
mod ofdm;
mod sequence;

pub use config::{ConfigId, WaveformConfig, COMB_SPACING, SRS_SYMBOLS, SYMBOLS_PER_SLOT};
pub use ofdm::{
    extract_srs_symbols, map_to_grid, ofdm_demodulate, ofdm_modulate, BasebandSignal, Ofdm,
    ResourceGrid,
};
pub use sequence::{generate_srs_sequence, largest_prime_at_most, zadoff_chu_extended, MIN_SEQUENCE_LEN};

use crate::error::Result;

/// Default Zadoff-Chu root.
pub const DEFAULT_ROOT: usize = 25;

/// Pilots plus the clean single-slot waveform carrying them; the waveform
/// doubles as the receiver's synchronisation reference.
#[derive(Debug, Clone)]
pub struct SrsWaveform {
    pub pilots: Vec<num_complex::Complex64>,
    pub slot: BasebandSignal,
}

impl SrsWaveform {
    pub fn new(cfg: &WaveformConfig, root_index: usize, cyclic_shift: f64) -> Result<Self> {
        let pilots = generate_srs_sequence(cfg, root_index, cyclic_shift)?;
        let slot = ofdm_modulate(&map_to_grid(&pilots, cfg)?, cfg)?;
        Ok(SrsWaveform { pilots, slot })
    }

    pub fn default_for(cfg: &WaveformConfig) -> Result<Self> {
        Self::new(cfg, DEFAULT_ROOT, 0.0)
    }
}
