use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{LoPair, MultichannelCapture};
use crate::error::{Error, Result};

/// Receiver phase misalignment plus the injected calibration tone.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpairmentModel {
    /// Static per-channel phase, radians, known after offline calibration.
    pub intra_pair_phases: Vec<f64>,
    /// Extra phase of every pair-B channel, radians; new on every run.
    pub inter_pair_lo_phase: f64,
    pub channel_pairing: Vec<LoPair>,
    /// Baseband frequency of the tone, Hz.
    pub reference_tone_freq: f64,
    pub reference_tone_amplitude: f64,
}

/// Wraps an angle into `[-π, π)`.
pub fn wrap_phase(phi: f64) -> f64 {
    let w = (phi + PI).rem_euclid(2.0 * PI) - PI;
    if w >= PI {
        w - 2.0 * PI
    } else {
        w
    }
}

impl ImpairmentModel {
    /// Uniform intra-pair and LO phases in `[-π, π)`.
    pub fn random(
        channel_pairing: Vec<LoPair>,
        reference_tone_freq: f64,
        reference_tone_amplitude: f64,
        seed: u64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let intra_pair_phases = channel_pairing
            .iter()
            .map(|_| rng.random_range(-PI..PI))
            .collect();
        ImpairmentModel {
            intra_pair_phases,
            inter_pair_lo_phase: rng.random_range(-PI..PI),
            channel_pairing,
            reference_tone_freq,
            reference_tone_amplitude,
        }
    }

    /// Total phase rotation seen by channel `m`.
    pub fn channel_phase(&self, m: usize) -> f64 {
        let lo = match self.channel_pairing[m] {
            LoPair::A => 0.0,
            LoPair::B => self.inter_pair_lo_phase,
        };
        self.intra_pair_phases[m] + lo
    }

    fn validate(&self, capture: &MultichannelCapture) -> Result<()> {
        if self.channel_pairing != capture.layout.pairs {
            return Err(Error::Layout("impairment pairing differs from capture layout".into()));
        }
        if self.intra_pair_phases.len() != capture.n_channels() {
            return Err(Error::Dimension {
                what: "intra-pair phases",
                expected: capture.n_channels(),
                actual: self.intra_pair_phases.len(),
            });
        }
        let in_range = |p: f64| (-PI..PI).contains(&p);
        if !self.intra_pair_phases.iter().all(|p| in_range(*p)) || !in_range(self.inter_pair_lo_phase) {
            return Err(Error::Config("impairment phases must lie in [-pi, pi)".into()));
        }
        Ok(())
    }
}

/// Injects the tone on the reference taps, then rotates every channel by its
/// intra-pair phase and pair-B channels by the LO phase as well. The tone's
/// starting phase is drawn from `seed`.
pub fn apply_impairments(
    capture: &MultichannelCapture,
    imp: &ImpairmentModel,
    seed: u64,
) -> Result<MultichannelCapture> {
    imp.validate(capture)?;
    let mut out = capture.clone();
    if imp.reference_tone_amplitude != 0.0 {
        let taps = capture
            .layout
            .reference
            .ok_or_else(|| Error::Layout("reference tone requested but layout has no taps".into()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phase0: f64 = rng.random_range(-PI..PI);
        let w = 2.0 * PI * imp.reference_tone_freq / capture.sample_rate;
        for tap in [taps.pair_a, taps.pair_b] {
            for (n, z) in out.channels[tap].iter_mut().enumerate() {
                *z += Complex64::from_polar(imp.reference_tone_amplitude, phase0 + w * n as f64);
            }
        }
    }
    for (m, ch) in out.channels.iter_mut().enumerate() {
        let rot = Complex64::from_polar(1.0, imp.channel_phase(m));
        ch.iter_mut().for_each(|z| *z *= rot);
    }
    Ok(out)
}
