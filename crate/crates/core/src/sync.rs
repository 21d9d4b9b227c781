//! Slot timing by matched filtering, comb-based SINR, and tone phase
//! comparison between receiver channels.

use std::f64::consts::PI;
use std::ops::Range;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::channel::wrap_phase;
use crate::error::{Error, Result};
use crate::waveform::{BasebandSignal, ResourceGrid, WaveformConfig};

/// References longer than this are correlated in the frequency domain.
pub const DIRECT_CORRELATION_MAX: usize = 4096;

/// Default upper clamp for SINR estimates, dB.
pub const SINR_CEILING_DB: f64 = 60.0;

/// Minimum ratio of tone-bin power to the mean per-bin power of the record.
const TONE_DETECTION_RATIO: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationResult {
    pub peak_index: usize,
    pub peak_magnitude: f64,
    pub correlation_profile: Option<Vec<f64>>,
}

impl CorrelationResult {
    /// Median of the retained profile, 0 when none was kept.
    pub fn profile_median(&self) -> f64 {
        self.correlation_profile
            .as_deref()
            .map(crate::stats::median)
            .unwrap_or(0.0)
    }
}

/// `|Σ_i conj(reference[i]) received[n+i]|` for every full overlap
/// `n = 0 ..= received.len() - reference.len()`.
pub fn cross_correlate(reference: &[Complex64], received: &[Complex64]) -> Result<Vec<f64>> {
    if reference.len() > received.len() {
        return Err(Error::InsufficientSamples {
            needed: reference.len(),
            available: received.len(),
        });
    }
    if reference.is_empty() {
        return Err(Error::Config("empty correlation reference".into()));
    }
    let lags = received.len() - reference.len() + 1;
    if reference.len() <= DIRECT_CORRELATION_MAX {
        return Ok((0..lags)
            .map(|n| {
                reference
                    .iter()
                    .zip(&received[n..])
                    .map(|(s, x)| s.conj() * x)
                    .sum::<Complex64>()
                    .norm()
            })
            .collect());
    }
    let size = (received.len() + reference.len()).next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let mut x = vec![Complex64::new(0.0, 0.0); size];
    x[..received.len()].copy_from_slice(received);
    let mut s = vec![Complex64::new(0.0, 0.0); size];
    s[..reference.len()].copy_from_slice(reference);
    fwd.process(&mut x);
    fwd.process(&mut s);
    for (a, b) in x.iter_mut().zip(&s) {
        *a *= b.conj();
    }
    inv.process(&mut x);
    let scale = 1.0 / size as f64;
    Ok(x[..lags].iter().map(|z| z.norm() * scale).collect())
}

/// First index of the maximum; ties go to the smallest index.
fn argmax(values: &[f64]) -> (usize, f64) {
    values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) })
}

/// Locates the slot start inside a window of at least two slots.
///
/// Lags `n` and `n + slot_len` denote the same slot boundary, so the search
/// covers one slot of lags, `[0, slot_len)`.
pub fn detect_slot_start(
    cfg: &WaveformConfig,
    reference: &BasebandSignal,
    received: &[Complex64],
) -> Result<CorrelationResult> {
    let slot = cfg.slot_len();
    if reference.len() != slot {
        return Err(Error::Dimension {
            what: "sync reference",
            expected: slot,
            actual: reference.len(),
        });
    }
    if received.len() < 2 * slot {
        return Err(Error::InsufficientSamples {
            needed: 2 * slot,
            available: received.len(),
        });
    }
    let mut profile = cross_correlate(&reference.samples, &received[..2 * slot - 1])?;
    debug_assert_eq!(profile.len(), slot);
    profile.truncate(slot);
    let (peak_index, peak_magnitude) = argmax(&profile);
    Ok(CorrelationResult {
        peak_index,
        peak_magnitude,
        correlation_profile: Some(profile),
    })
}

/// Mean power on occupied and on empty comb positions of the SRS symbols,
/// accumulated over several grids.
fn comb_powers<'a>(grids: impl IntoIterator<Item = &'a ResourceGrid>, cfg: &WaveformConfig) -> (f64, f64) {
    let (mut used, mut n_used, mut empty, mut n_empty) = (0.0, 0usize, 0.0, 0usize);
    for grid in grids {
        for l in cfg.srs_symbol_start..cfg.srs_symbol_start + cfg.srs_symbols {
            for k in 0..cfg.n_subcarriers {
                let p = grid.values[(l, k)].norm_sqr();
                if k % cfg.comb_spacing == 0 {
                    used += p;
                    n_used += 1;
                } else {
                    empty += p;
                    n_empty += 1;
                }
            }
        }
    }
    (used / n_used.max(1) as f64, empty / n_empty.max(1) as f64)
}

fn sinr_from_powers(used: f64, empty: f64, ceiling_db: f64) -> f64 {
    if used <= empty {
        return f64::NEG_INFINITY;
    }
    if empty == 0.0 {
        return ceiling_db;
    }
    (10.0 * ((used - empty) / empty).log10()).min(ceiling_db)
}

/// `10 log10((P_used - P_empty) / P_empty)` over the SRS symbols, with mean
/// powers per resource element. No detectable signal gives `-inf`;
/// estimates are clamped to [`SINR_CEILING_DB`].
pub fn estimate_sinr(grid: &ResourceGrid, cfg: &WaveformConfig) -> f64 {
    estimate_sinr_pooled(std::slice::from_ref(grid), cfg, SINR_CEILING_DB)
}

/// SINR with powers pooled across the grids of several antennas.
pub fn estimate_sinr_pooled(grids: &[ResourceGrid], cfg: &WaveformConfig, ceiling_db: f64) -> f64 {
    let (used, empty) = comb_powers(grids, cfg);
    sinr_from_powers(used, empty, ceiling_db)
}

/// Single-frequency component of `x` at `freq`, normalised by length.
fn tone_bin(x: &[Complex64], freq: f64, sample_rate: f64) -> Complex64 {
    let w = -2.0 * PI * freq / sample_rate;
    let step = Complex64::from_polar(1.0, w);
    let mut rot = Complex64::new(1.0, 0.0);
    let mut acc = Complex64::new(0.0, 0.0);
    for (n, z) in x.iter().enumerate() {
        // renormalise the rotator periodically to stop magnitude drift
        if n % 1024 == 0 {
            rot = Complex64::from_polar(1.0, w * n as f64);
        }
        acc += z * rot;
        rot *= step;
    }
    acc / x.len() as f64
}

/// Phase of channel B relative to channel A at the tone frequency, in
/// `[-π, π)`.
pub fn estimate_phase_offset(
    channel_a: &[Complex64],
    channel_b: &[Complex64],
    tone_freq: f64,
    sample_rate: f64,
) -> Result<f64> {
    if channel_a.len() != channel_b.len() {
        return Err(Error::Dimension {
            what: "phase reference channels",
            expected: channel_a.len(),
            actual: channel_b.len(),
        });
    }
    if channel_a.len() < 1000 {
        return Err(Error::InsufficientSamples {
            needed: 1000,
            available: channel_a.len(),
        });
    }
    let n = channel_a.len() as f64;
    let mut bins = [Complex64::new(0.0, 0.0); 2];
    for (bin, (name, x)) in bins.iter_mut().zip([("A", channel_a), ("B", channel_b)]) {
        let b = tone_bin(x, tone_freq, sample_rate);
        let mean_power = x.iter().map(|z| z.norm_sqr()).sum::<f64>() / n;
        if !(b.norm_sqr() > TONE_DETECTION_RATIO * mean_power / n) {
            return Err(Error::Calibration(format!(
                "reference tone not detected on pair {name} tap"
            )));
        }
        *bin = b;
    }
    Ok(wrap_phase((bins[1] * bins[0].conj()).arg()))
}

/// Phase of channel B relative to channel A measured separately over each
/// window, with the per-window cross products summed. Windows covering whole
/// OFDM symbol bodies keep content on other FFT bins out of a bin-centred
/// tone's estimate.
pub fn estimate_phase_offset_windowed(
    channel_a: &[Complex64],
    channel_b: &[Complex64],
    windows: &[Range<usize>],
    tone_freq: f64,
    sample_rate: f64,
) -> Result<f64> {
    let len = channel_a.len().min(channel_b.len());
    if let Some(w) = windows.iter().find(|w| w.end > len || w.is_empty()) {
        return Err(Error::InsufficientSamples {
            needed: w.end.max(w.start + 1),
            available: len,
        });
    }
    let mut cross = Complex64::new(0.0, 0.0);
    let mut tone = [0.0f64; 2];
    let mut floor = [0.0f64; 2];
    for w in windows {
        let n = w.len() as f64;
        let a = tone_bin(&channel_a[w.clone()], tone_freq, sample_rate);
        let b = tone_bin(&channel_b[w.clone()], tone_freq, sample_rate);
        cross += b * a.conj();
        for (k, (bin, x)) in [(a, &channel_a[w.clone()]), (b, &channel_b[w.clone()])].into_iter().enumerate() {
            tone[k] += bin.norm_sqr();
            floor[k] += x.iter().map(|z| z.norm_sqr()).sum::<f64>() / (n * n);
        }
    }
    for (k, name) in ["A", "B"].into_iter().enumerate() {
        if !(tone[k] > TONE_DETECTION_RATIO * floor[k]) {
            return Err(Error::Calibration(format!(
                "reference tone not detected on pair {name} tap"
            )));
        }
    }
    Ok(wrap_phase(cross.arg()))
}
