use crate::channel::{
    add_awgn, apply_impairments, compute_scene_paths, occupied_signal_power, propagate, relative_to_first_arrival,
    CaptureLayout, ImpairmentModel, MultichannelCapture, PropagationPath, SceneParams, UlaGeometry,
};
use crate::error::Result;
use crate::waveform::{SrsWaveform, WaveformConfig};

/// Time-domain SNR over occupied samples giving `re_snr_db` per occupied
/// resource element: a symbol spreads its pilots' power over the FFT size.
pub fn sample_snr_db(cfg: &WaveformConfig, re_snr_db: f64) -> f64 {
    re_snr_db + 10.0 * (cfg.n_pilots() as f64 / cfg.fft_size as f64).log10()
}

/// Adds noise at a per-resource-element SNR; infinite SNR adds nothing.
pub fn add_re_noise(capture: &MultichannelCapture, cfg: &WaveformConfig, re_snr_db: f64, seed: u64) -> MultichannelCapture {
    if re_snr_db == f64::INFINITY {
        return capture.clone();
    }
    add_awgn(capture, sample_snr_db(cfg, re_snr_db), seed)
}

/// Scene paths for a transmitter at `distance` and `angle_deg`, delays
/// re-referenced to the first arrival.
pub fn scene_paths(params: &SceneParams, distance: f64, angle_deg: f64, geom: &UlaGeometry) -> Result<Vec<PropagationPath>> {
    let paths = compute_scene_paths(&params.scene(distance, angle_deg), geom)?;
    Ok(relative_to_first_arrival(&paths))
}

/// `n_slots` back-to-back SRS slots through `paths`. Propagation delays are
/// circular, so every window of the result is a valid received stream.
pub fn synthesize(
    waveform: &SrsWaveform,
    paths: &[PropagationPath],
    geom: &UlaGeometry,
    n_slots: usize,
) -> Result<MultichannelCapture> {
    propagate(&waveform.slot.repeat(n_slots), paths, geom)
}

/// Moves the antennas onto the split-LO layout, injects the reference tone
/// at `tone_amplitude` times the occupied RMS amplitude, and applies `imp`.
pub fn impair(
    capture: &MultichannelCapture,
    cfg: &WaveformConfig,
    imp: &ImpairmentModel,
    tone_amplitude: f64,
    seed: u64,
) -> Result<MultichannelCapture> {
    let rms = occupied_signal_power(capture).sqrt();
    let rehomed = capture.with_layout(CaptureLayout::split_lo_default())?;
    let model = ImpairmentModel {
        reference_tone_freq: cfg.guard_tone_freq(),
        reference_tone_amplitude: tone_amplitude * rms,
        ..imp.clone()
    };
    apply_impairments(&rehomed, &model, seed)
}

/// Random intra-pair and LO phases for the split-LO layout.
pub fn random_impairments(cfg: &WaveformConfig, seed: u64) -> ImpairmentModel {
    ImpairmentModel::random(CaptureLayout::split_lo_default().pairs, cfg.guard_tone_freq(), 0.0, seed)
}

/// splitmix64 finaliser over the master seed and two indices.
pub fn derive_seed(master: u64, a: u64, b: u64) -> u64 {
    let mut z = master
        ^ a.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ b.wrapping_add(1).wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
