use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::geometry::steering_unchecked;
use super::{CaptureLayout, MultichannelCapture, PropagationPath, UlaGeometry};
use crate::error::{Error, Result};
use crate::waveform::BasebandSignal;

/// Superposes delayed, steered copies of `signal` on every array element.
///
/// Delays are applied as a linear phase ramp over the whole record, so the
/// shift is circular: feed a slot-periodic stream and the result is exact.
/// Each path also carries the carrier phase `exp(-j 2π f_c τ)`.
pub fn propagate(
    signal: &BasebandSignal,
    paths: &[PropagationPath],
    geom: &UlaGeometry,
) -> Result<MultichannelCapture> {
    if paths.is_empty() {
        return Err(Error::NoPaths);
    }
    if let Some(p) = paths.iter().find(|p| !p.delay.is_finite() || !(p.azimuth_deg.abs() < 90.0)) {
        return Err(Error::Config(format!("invalid path {p:?}")));
    }
    geom.validate()?;
    let m = geom.n_elements;
    let steering: Vec<_> = paths
        .iter()
        .map(|p| steering_unchecked(geom, p.azimuth_deg))
        .collect();
    let carrier_phase = |p: &PropagationPath| {
        p.gain * Complex64::from_polar(1.0, -2.0 * PI * geom.carrier_freq * p.delay)
    };

    let channels = if paths.iter().all(|p| p.delay == 0.0) {
        (0..m)
            .map(|e| {
                let w: Complex64 = paths
                    .iter()
                    .zip(&steering)
                    .map(|(p, a)| carrier_phase(p) * a[e])
                    .sum();
                signal.samples.iter().map(|s| s * w).collect()
            })
            .collect()
    } else {
        let n = signal.len();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let mut spectrum = signal.samples.clone();
        fwd.process(&mut spectrum);
        let df = signal.sample_rate / n as f64;
        let freqs: Vec<f64> = (0..n)
            .map(|k| {
                let signed = if k < n.div_ceil(2) { k as f64 } else { k as f64 - n as f64 };
                signed * df
            })
            .collect();
        (0..m)
            .map(|e| {
                let mut out = vec![Complex64::new(0.0, 0.0); n];
                for (p, a) in paths.iter().zip(&steering) {
                    let w = carrier_phase(p) * a[e] / n as f64;
                    for ((o, s), f) in out.iter_mut().zip(&spectrum).zip(&freqs) {
                        *o += s * w * Complex64::from_polar(1.0, -2.0 * PI * f * p.delay);
                    }
                }
                inv.process(&mut out);
                out
            })
            .collect()
    };
    MultichannelCapture::new(
        channels,
        signal.sample_rate,
        geom.carrier_freq,
        CaptureLayout::antennas_only(m),
    )
}
