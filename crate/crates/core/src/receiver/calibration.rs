use std::f64::consts::PI;

use num_complex::Complex64;

use crate::channel::{wrap_phase, ImpairmentModel, LoPair, MultichannelCapture};
use crate::error::{Error, Result};
use crate::sync::{estimate_phase_offset, estimate_phase_offset_windowed};
use crate::waveform::WaveformConfig;

/// Offline-measured static phase of every receiver channel.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationTable {
    pub intra_pair_phases: Vec<f64>,
}

impl CalibrationTable {
    pub fn zeros(n_channels: usize) -> Self {
        CalibrationTable {
            intra_pair_phases: vec![0.0; n_channels],
        }
    }

    /// Table that exactly undoes the static part of `imp`.
    pub fn from_impairments(imp: &ImpairmentModel) -> Self {
        CalibrationTable {
            intra_pair_phases: imp.intra_pair_phases.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self
            .intra_pair_phases
            .iter()
            .find(|p| !(p.is_finite() && (-PI..PI).contains(*p)))
        {
            Some(p) => Err(Error::Calibration(format!("calibration phase {p} outside [-pi, pi)"))),
            None => Ok(()),
        }
    }

    /// Parses one phase in radians per line; blank lines and `#` comments
    /// are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut phases = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let p: f64 = line
                .parse()
                .map_err(|_| Error::Calibration(format!("line {}: bad phase {line:?}", i + 1)))?;
            phases.push(if (-PI..PI).contains(&p) { p } else { wrap_phase(p) });
        }
        let table = CalibrationTable {
            intra_pair_phases: phases,
        };
        table.validate()?;
        Ok(table)
    }

    pub fn to_text(&self) -> String {
        self.intra_pair_phases.iter().map(|p| format!("{p:?}\n")).collect()
    }
}

/// Rotates channel `m` by `exp(-j·phase_m)`.
pub fn apply_calibration(capture: &MultichannelCapture, table: &CalibrationTable) -> Result<MultichannelCapture> {
    table.validate()?;
    if table.intra_pair_phases.len() < capture.n_channels() {
        return Err(Error::Calibration(format!(
            "table covers {} channels, capture has {}",
            table.intra_pair_phases.len(),
            capture.n_channels()
        )));
    }
    let mut out = capture.clone();
    for (ch, &p) in out.channels.iter_mut().zip(&table.intra_pair_phases) {
        if p != 0.0 {
            let rot = Complex64::from_polar(1.0, -p);
            ch.iter_mut().for_each(|z| *z *= rot);
        }
    }
    Ok(out)
}

/// Phase of pair B relative to pair A, from the common tone seen on the two
/// reference taps.
pub fn estimate_pair_offset(capture: &MultichannelCapture, tone_freq: f64) -> Result<f64> {
    let taps = capture
        .layout
        .reference
        .ok_or_else(|| Error::Calibration("layout has no reference taps".into()))?;
    estimate_phase_offset(
        &capture.channels[taps.pair_a],
        &capture.channels[taps.pair_b],
        tone_freq,
        capture.sample_rate,
    )
}

/// Pair offset measured over the symbol bodies of the slot starting at
/// `slot_offset`. The SRS fills whole FFT bins there, so it does not leak
/// into a bin-centred tone.
pub fn estimate_pair_offset_in_slot(
    capture: &MultichannelCapture,
    cfg: &WaveformConfig,
    slot_offset: usize,
    tone_freq: f64,
) -> Result<f64> {
    let taps = capture
        .layout
        .reference
        .ok_or_else(|| Error::Calibration("layout has no reference taps".into()))?;
    let windows: Vec<_> = (0..cfg.symbols_per_slot)
        .map(|l| {
            let start = slot_offset + cfg.symbol_start(l) + cfg.cp_lengths[l];
            start..start + cfg.fft_size
        })
        .collect();
    estimate_phase_offset_windowed(
        &capture.channels[taps.pair_a],
        &capture.channels[taps.pair_b],
        &windows,
        tone_freq,
        capture.sample_rate,
    )
}

/// Rotates every pair-B channel by the negative of the measured offset.
pub fn align_pairs(capture: &MultichannelCapture, tone_freq: f64) -> Result<MultichannelCapture> {
    let offset = estimate_pair_offset(capture, tone_freq)?;
    Ok(rotate_pair_b(capture, -offset))
}

pub(crate) fn rotate_pair_b(capture: &MultichannelCapture, phase: f64) -> MultichannelCapture {
    let mut out = capture.clone();
    let rot = Complex64::from_polar(1.0, phase);
    for (ch, pair) in out.channels.iter_mut().zip(&capture.layout.pairs) {
        if *pair == LoPair::B {
            ch.iter_mut().for_each(|z| *z *= rot);
        }
    }
    out
}
