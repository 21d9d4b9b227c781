use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::CampaignConfig;
use super::scenario::{add_re_noise, impair, random_impairments, scene_paths, synthesize};
use crate::channel::{CaptureLayout, MultichannelCapture, UlaGeometry};
use crate::error::{Error, Result};
use crate::receiver::CalibrationTable;
use crate::waveform::SrsWaveform;

/// A recording produced by [`simulate_capture`] with what the receiver
/// needs to undo it.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedCapture {
    pub capture: MultichannelCapture,
    pub calibration: CalibrationTable,
    pub true_angle_deg: f64,
    pub snr_db: f64,
}

/// Field-style recording of `capture.duration_ms` at the first configured
/// distance, starting at a random point of the slot grid. With impairments
/// enabled the antennas sit on the split-LO layout with a reference tone.
pub fn simulate_capture(cfg: &CampaignConfig, seed: u64) -> Result<SimulatedCapture> {
    cfg.validate()?;
    let wf = cfg.waveform.waveform();
    let geom = UlaGeometry::half_wavelength(cfg.n_elements, wf.carrier_freq)?;
    let waveform = SrsWaveform::default_for(&wf)?;
    let distance = cfg.distances[0];
    let snr_db = cfg.snr.at(0);
    let paths = scene_paths(&cfg.scene, distance, cfg.angle_deg, &geom)?;

    let slot = wf.slot_len();
    let n = (cfg.capture.duration_ms * 1e-3 * wf.sample_rate).round() as usize;
    if n < 2 * slot {
        return Err(Error::Config(format!(
            "capture.duration_ms: {} ms is shorter than two slots",
            cfg.capture.duration_ms
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offset = rng.random_range(0..slot);
    let stream = synthesize(&waveform, &paths, &geom, n.div_ceil(slot) + 1)?;
    let clean = stream.slice(offset..offset + n)?;

    let (capture, calibration) = if cfg.capture.impairments {
        if cfg.n_elements != 3 {
            return Err(Error::Config("capture.impairments: split-LO layout needs n_elements = 3".into()));
        }
        let split = clean.with_layout(CaptureLayout::split_lo_default())?;
        let noisy = add_re_noise(&split, &wf, snr_db, rng.random());
        let imp = random_impairments(&wf, rng.random());
        let impaired = impair(&noisy, &wf, &imp, cfg.capture.tone_amplitude, rng.random())?;
        (impaired, CalibrationTable::from_impairments(&imp))
    } else {
        let noisy = add_re_noise(&clean, &wf, snr_db, rng.random());
        let table = CalibrationTable::zeros(noisy.n_channels());
        (noisy, table)
    };
    Ok(SimulatedCapture {
        capture,
        calibration,
        true_angle_deg: paths[0].azimuth_deg,
        snr_db,
    })
}
