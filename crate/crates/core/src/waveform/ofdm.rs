use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::WaveformConfig;
use crate::error::{Error, Result};

/// Symbols × subcarriers frequency-domain grid of one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceGrid {
    pub values: DMatrix<Complex64>,
}

impl ResourceGrid {
    pub fn zeros(cfg: &WaveformConfig) -> Self {
        ResourceGrid {
            values: DMatrix::zeros(cfg.symbols_per_slot, cfg.n_subcarriers),
        }
    }

    pub fn energy(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum()
    }

    fn check(&self, cfg: &WaveformConfig) -> Result<()> {
        if self.values.nrows() != cfg.symbols_per_slot {
            return Err(Error::Dimension {
                what: "grid symbols",
                expected: cfg.symbols_per_slot,
                actual: self.values.nrows(),
            });
        }
        if self.values.ncols() != cfg.n_subcarriers {
            return Err(Error::Dimension {
                what: "grid subcarriers",
                expected: cfg.n_subcarriers,
                actual: self.values.ncols(),
            });
        }
        Ok(())
    }
}

/// Complex baseband samples at a fixed rate.
#[derive(Debug, Clone, PartialEq)]
pub struct BasebandSignal {
    pub samples: Vec<Complex64>,
    pub sample_rate: f64,
}

impl BasebandSignal {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Concatenates `n` copies of the signal.
    pub fn repeat(&self, n: usize) -> BasebandSignal {
        BasebandSignal {
            samples: self.samples.repeat(n),
            sample_rate: self.sample_rate,
        }
    }
}

/// Places the comb pilots on every `comb_spacing`-th subcarrier of the SRS
/// symbols; all other resource elements are zero.
pub fn map_to_grid(pilots: &[Complex64], cfg: &WaveformConfig) -> Result<ResourceGrid> {
    if pilots.len() != cfg.n_pilots() {
        return Err(Error::Dimension {
            what: "pilot sequence",
            expected: cfg.n_pilots(),
            actual: pilots.len(),
        });
    }
    let mut grid = ResourceGrid::zeros(cfg);
    for l in cfg.srs_symbol_start..cfg.srs_symbol_start + cfg.srs_symbols {
        for (j, p) in pilots.iter().enumerate() {
            grid.values[(l, j * cfg.comb_spacing)] = *p;
        }
    }
    Ok(grid)
}

/// Occupied comb entries of the SRS symbols, `srs_symbols × n_pilots`.
pub fn extract_srs_symbols(grid: &ResourceGrid, cfg: &WaveformConfig) -> Result<DMatrix<Complex64>> {
    let first = cfg.srs_symbol_start;
    if grid.values.nrows() < first + cfg.srs_symbols {
        return Err(Error::Dimension {
            what: "grid symbols",
            expected: first + cfg.srs_symbols,
            actual: grid.values.nrows(),
        });
    }
    if grid.values.ncols() != cfg.n_subcarriers {
        return Err(Error::Dimension {
            what: "grid subcarriers",
            expected: cfg.n_subcarriers,
            actual: grid.values.ncols(),
        });
    }
    Ok(DMatrix::from_fn(cfg.srs_symbols, cfg.n_pilots(), |l, j| {
        grid.values[(first + l, j * cfg.comb_spacing)]
    }))
}

/// Planned transforms for one configuration. Cheap to clone and shareable
/// across threads.
#[derive(Clone)]
pub struct Ofdm {
    cfg: WaveformConfig,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl std::fmt::Debug for Ofdm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Ofdm").field("fft_size", &self.cfg.fft_size).finish()
    }
}

impl Ofdm {
    pub fn new(cfg: &WaveformConfig) -> Self {
        let mut planner = FftPlanner::new();
        Ofdm {
            cfg: cfg.clone(),
            forward: planner.plan_fft_forward(cfg.fft_size),
            inverse: planner.plan_fft_inverse(cfg.fft_size),
            scale: 1.0 / (cfg.fft_size as f64).sqrt(),
        }
    }

    pub fn config(&self) -> &WaveformConfig {
        &self.cfg
    }

    /// Unitary inverse transform per symbol with the cyclic prefix prepended.
    pub fn modulate(&self, grid: &ResourceGrid) -> Result<BasebandSignal> {
        let cfg = &self.cfg;
        grid.check(cfg)?;
        let n = cfg.fft_size;
        let mut out = Vec::with_capacity(cfg.slot_len());
        let mut body = vec![Complex64::new(0.0, 0.0); n];
        for l in 0..cfg.symbols_per_slot {
            body.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
            for k in 0..cfg.n_subcarriers {
                body[cfg.subcarrier_bin(k)] = grid.values[(l, k)];
            }
            self.inverse.process(&mut body);
            body.iter_mut().for_each(|z| *z *= self.scale);
            let cp = cfg.cp_lengths[l];
            out.extend_from_slice(&body[n - cp..]);
            out.extend_from_slice(&body);
        }
        Ok(BasebandSignal {
            samples: out,
            sample_rate: cfg.sample_rate,
        })
    }

    /// Demodulates one slot starting at `start_offset`.
    pub fn demodulate(&self, samples: &[Complex64], start_offset: usize) -> Result<ResourceGrid> {
        let cfg = &self.cfg;
        let needed = start_offset + cfg.slot_len();
        if samples.len() < needed {
            return Err(Error::InsufficientSamples {
                needed,
                available: samples.len(),
            });
        }
        let n = cfg.fft_size;
        let mut grid = ResourceGrid::zeros(cfg);
        let mut body = vec![Complex64::new(0.0, 0.0); n];
        for l in 0..cfg.symbols_per_slot {
            let start = start_offset + cfg.symbol_start(l) + cfg.cp_lengths[l];
            body.copy_from_slice(&samples[start..start + n]);
            self.forward.process(&mut body);
            for k in 0..cfg.n_subcarriers {
                grid.values[(l, k)] = body[cfg.subcarrier_bin(k)] * self.scale;
            }
        }
        Ok(grid)
    }

    /// Demodulates only the SRS symbols of a slot, `srs_symbols × n_pilots`.
    pub fn demodulate_srs(&self, samples: &[Complex64], start_offset: usize) -> Result<DMatrix<Complex64>> {
        extract_srs_symbols(&self.demodulate(samples, start_offset)?, &self.cfg)
    }
}

pub fn ofdm_modulate(grid: &ResourceGrid, cfg: &WaveformConfig) -> Result<BasebandSignal> {
    Ofdm::new(cfg).modulate(grid)
}

pub fn ofdm_demodulate(
    signal: &BasebandSignal,
    cfg: &WaveformConfig,
    start_offset: usize,
) -> Result<ResourceGrid> {
    Ofdm::new(cfg).demodulate(&signal.samples, start_offset)
}
