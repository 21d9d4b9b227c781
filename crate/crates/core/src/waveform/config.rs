use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// OFDM symbols in one NR slot with normal cyclic prefix.
pub const SYMBOLS_PER_SLOT: usize = 14;
/// Consecutive SRS symbols at the start of every slot.
pub const SRS_SYMBOLS: usize = 4;
/// Transmission comb K_TC.
pub const COMB_SPACING: usize = 2;

/// Waveform configurations from the testbed table.
///
/// Only I, II and III are exercised end to end; the rest parse and validate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConfigId {
    I,
    II,
    III,
    IV,
    V,
    VI,
    VII,
    VIII,
}

impl ConfigId {
    pub const ALL: [ConfigId; 8] = [
        ConfigId::I,
        ConfigId::II,
        ConfigId::III,
        ConfigId::IV,
        ConfigId::V,
        ConfigId::VI,
        ConfigId::VII,
        ConfigId::VIII,
    ];

    /// (numerology, bandwidth Hz, carrier Hz)
    fn parameters(self) -> (u32, f64, f64) {
        match self {
            ConfigId::I => (1, 20e6, 2.4e9),
            ConfigId::II => (1, 50e6, 2.4e9),
            ConfigId::III => (1, 20e6, 3.5e9),
            ConfigId::IV => (1, 50e6, 3.5e9),
            ConfigId::V => (2, 20e6, 3.5e9),
            ConfigId::VI => (2, 50e6, 3.5e9),
            ConfigId::VII => (2, 20e6, 5.8e9),
            ConfigId::VIII => (2, 50e6, 5.8e9),
        }
    }

    pub fn waveform(self) -> WaveformConfig {
        let (mu, bw, fc) = self.parameters();
        WaveformConfig::new(mu, bw, fc).expect("table configurations are valid")
    }
}

impl fmt::Display for ConfigId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ConfigId::I => "I",
            ConfigId::II => "II",
            ConfigId::III => "III",
            ConfigId::IV => "IV",
            ConfigId::V => "V",
            ConfigId::VI => "VI",
            ConfigId::VII => "VII",
            ConfigId::VIII => "VIII",
        };
        f.write_str(s)
    }
}

impl FromStr for ConfigId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ConfigId::ALL
            .into_iter()
            .find(|id| id.to_string().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown waveform configuration {s:?}")))
    }
}

/// Maximum transmission bandwidth in resource blocks for FR1 channel
/// bandwidths (MHz) at a given subcarrier spacing (kHz).
fn max_resource_blocks(scs_khz: u32, bandwidth_mhz: u32) -> Option<usize> {
    let table: &[(u32, usize)] = match scs_khz {
        15 => &[
            (5, 25),
            (10, 52),
            (15, 79),
            (20, 106),
            (25, 133),
            (30, 160),
            (40, 216),
            (50, 270),
        ],
        30 => &[
            (5, 11),
            (10, 24),
            (15, 38),
            (20, 51),
            (25, 65),
            (30, 78),
            (40, 106),
            (50, 133),
            (60, 162),
            (70, 189),
            (80, 217),
            (90, 245),
            (100, 273),
        ],
        60 => &[
            (10, 11),
            (15, 18),
            (20, 24),
            (25, 31),
            (30, 38),
            (40, 51),
            (50, 65),
            (60, 79),
            (70, 93),
            (80, 107),
            (90, 121),
            (100, 135),
        ],
        _ => return None,
    };
    table
        .iter()
        .find(|(bw, _)| *bw == bandwidth_mhz)
        .map(|(_, rb)| *rb)
}

/// Numerology and grid geometry of one waveform configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveformConfig {
    pub numerology_mu: u32,
    /// Hz
    pub subcarrier_spacing: f64,
    /// Hz
    pub bandwidth: f64,
    /// Hz
    pub carrier_freq: f64,
    pub n_resource_blocks: usize,
    pub n_subcarriers: usize,
    pub fft_size: usize,
    /// samples per second
    pub sample_rate: f64,
    /// Cyclic prefix length of every symbol in the slot.
    pub cp_lengths: Vec<usize>,
    pub symbols_per_slot: usize,
    pub srs_symbols: usize,
    pub comb_spacing: usize,
    pub srs_symbol_start: usize,
}

impl WaveformConfig {
    /// Builds the grid for numerology `mu` (subcarrier spacing 15·2^mu kHz).
    ///
    /// The FFT is the smallest power of two covering the allocation; the
    /// normal cyclic prefix is 144/2048 of the FFT size and the first symbol
    /// absorbs the remainder so one slot lasts exactly 1 ms / 2^mu.
    pub fn new(numerology_mu: u32, bandwidth: f64, carrier_freq: f64) -> Result<Self> {
        if numerology_mu > 2 {
            return Err(Error::Config(format!(
                "numerology {numerology_mu} not supported (0, 1 or 2)"
            )));
        }
        let scs_khz = 15u32 << numerology_mu;
        let bw_mhz = (bandwidth / 1e6).round();
        if (bandwidth - bw_mhz * 1e6).abs() > 1.0 || bw_mhz <= 0.0 {
            return Err(Error::Config(format!(
                "bandwidth {bandwidth} Hz is not a whole number of MHz"
            )));
        }
        let n_rb = max_resource_blocks(scs_khz, bw_mhz as u32).ok_or_else(|| {
            Error::Config(format!(
                "no resource-block allocation for {bw_mhz} MHz at {scs_khz} kHz"
            ))
        })?;
        if !(carrier_freq.is_finite() && carrier_freq > 0.0) {
            return Err(Error::Config(format!("invalid carrier frequency {carrier_freq}")));
        }
        let n_subcarriers = 12 * n_rb;
        let fft_size = n_subcarriers.next_power_of_two();
        let subcarrier_spacing = f64::from(scs_khz) * 1e3;
        // slot = 1 ms / 2^mu = 15 * N_FFT samples for every numerology
        let slot_samples = 15 * fft_size;
        let cp_normal = fft_size * 144 / 2048;
        let cp_first = slot_samples - SYMBOLS_PER_SLOT * fft_size - (SYMBOLS_PER_SLOT - 1) * cp_normal;
        let mut cp_lengths = vec![cp_normal; SYMBOLS_PER_SLOT];
        cp_lengths[0] = cp_first;

        let cfg = WaveformConfig {
            numerology_mu,
            subcarrier_spacing,
            bandwidth,
            carrier_freq,
            n_resource_blocks: n_rb,
            n_subcarriers,
            fft_size,
            sample_rate: subcarrier_spacing * fft_size as f64,
            cp_lengths,
            symbols_per_slot: SYMBOLS_PER_SLOT,
            srs_symbols: SRS_SYMBOLS,
            comb_spacing: COMB_SPACING,
            srs_symbol_start: 0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks the structural invariants of the configuration.
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if !self.fft_size.is_power_of_two() || self.fft_size < self.n_subcarriers {
            return fail(format!(
                "fft size {} must be a power of two >= {} subcarriers",
                self.fft_size, self.n_subcarriers
            ));
        }
        if self.n_subcarriers != 12 * self.n_resource_blocks {
            return fail("subcarrier count must be 12 per resource block".into());
        }
        if self.sample_rate != self.subcarrier_spacing * self.fft_size as f64 {
            return fail("sample rate must equal subcarrier spacing times fft size".into());
        }
        if self.comb_spacing != COMB_SPACING {
            return fail(format!("comb spacing {} not supported", self.comb_spacing));
        }
        if self.cp_lengths.len() != self.symbols_per_slot {
            return fail("one cyclic prefix length per symbol required".into());
        }
        if self.srs_symbol_start + self.srs_symbols > self.symbols_per_slot {
            return fail("SRS symbols exceed the slot".into());
        }
        let expected = self.sample_rate * self.slot_duration();
        if (self.slot_len() as f64 - expected).abs() > 1e-6 {
            return fail(format!(
                "slot spans {} samples, expected {expected}",
                self.slot_len()
            ));
        }
        Ok(())
    }

    /// Seconds.
    pub fn slot_duration(&self) -> f64 {
        1e-3 / f64::from(1u32 << self.numerology_mu)
    }

    /// Samples in one slot including all cyclic prefixes.
    pub fn slot_len(&self) -> usize {
        self.cp_lengths.iter().map(|cp| cp + self.fft_size).sum()
    }

    /// Pilots per SRS symbol.
    pub fn n_pilots(&self) -> usize {
        self.n_subcarriers / self.comb_spacing
    }

    /// Offset of symbol `l`'s first cyclic-prefix sample from the slot start.
    pub fn symbol_start(&self, l: usize) -> usize {
        self.cp_lengths[..l].iter().map(|cp| cp + self.fft_size).sum()
    }

    /// FFT bin carrying grid subcarrier `k` (DC-centred mapping).
    pub fn subcarrier_bin(&self, k: usize) -> usize {
        let signed = k as isize - (self.n_subcarriers / 2) as isize;
        signed.rem_euclid(self.fft_size as isize) as usize
    }

    /// Baseband frequency of grid subcarrier `k` in Hz.
    pub fn subcarrier_freq(&self, k: usize) -> f64 {
        (k as f64 - (self.n_subcarriers / 2) as f64) * self.subcarrier_spacing
    }

    /// Wavelength at the carrier, metres.
    pub fn wavelength(&self) -> f64 {
        crate::SPEED_OF_LIGHT / self.carrier_freq
    }

    /// A bin-centred frequency in the guard band between the allocation
    /// edge and Nyquist, used for the inter-pair calibration tone.
    pub fn guard_tone_freq(&self) -> f64 {
        let edge = self.n_subcarriers / 2;
        let bin = (edge + self.fft_size / 2) / 2;
        bin as f64 * self.subcarrier_spacing
    }
}
