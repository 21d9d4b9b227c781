//! Per-slot processing of multichannel captures, outlier rejection and
//! snapshot averaging.
//!
//! A snapshot is walked in two-slot windows. Each window is synchronised
//! on the first antenna channel, phase-aligned across LO pairs when the
//! layout carries reference taps, demodulated, and handed to every
//! configured estimator. After the walk, angle and SINR sets are filtered
//! with the scaled-MAD rule and the survivors averaged.

mod calibration;
mod mad;

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

pub use calibration::{
    align_pairs, apply_calibration, estimate_pair_offset, estimate_pair_offset_in_slot, CalibrationTable,
};
pub use mad::{mad_filter, MadFiltered, MAD_SCALE, MAD_THRESHOLD};

use crate::channel::{MultichannelCapture, UlaGeometry};
use crate::error::{Error, Result};
use crate::stats::mean;
use crate::subspace::{
    esprit_estimate, estimate_num_sources_with, hankel_eigenvalues, jade_esprit_estimate, music_estimate,
    sample_covariance, strongest_angle, AngleDelay, ChannelEstimate, FrequencySnapshots, Method,
    DEFAULT_GRID_STEP, DEFAULT_STACKING, DEFAULT_THRESHOLD_FACTOR, hermitian_eig,
};
use crate::sync::{detect_slot_start, estimate_sinr_pooled, SINR_CEILING_DB};
use crate::waveform::{Ofdm, ResourceGrid, SrsWaveform, WaveformConfig};

/// Sync peaks must exceed this multiple of the profile median.
pub const DEFAULT_DETECTION_FACTOR: f64 = 6.0;

/// How many sources each estimator is asked for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SourcePolicy {
    Fixed(usize),
    /// Eigenvalue-threshold count, at most this many.
    Auto(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverOptions {
    pub methods: Vec<Method>,
    pub sources: SourcePolicy,
    pub source_threshold: f64,
    pub grid_step: f64,
    pub stacking: usize,
    pub detection_factor: f64,
    /// Index into the layout's antenna list.
    pub sync_antenna: usize,
    /// Tone used for pair alignment; `None` picks the guard-band default.
    pub tone_freq: Option<f64>,
    /// Pair alignment runs only when enabled and the layout has taps.
    pub align_pairs: bool,
}

impl Default for ReceiverOptions {
    fn default() -> Self {
        ReceiverOptions {
            methods: Method::ALL.to_vec(),
            sources: SourcePolicy::Auto(2),
            source_threshold: DEFAULT_THRESHOLD_FACTOR,
            grid_step: DEFAULT_GRID_STEP,
            stacking: DEFAULT_STACKING,
            detection_factor: DEFAULT_DETECTION_FACTOR,
            sync_antenna: 0,
            tone_freq: None,
            align_pairs: true,
        }
    }
}

/// One estimator's output on one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodEstimate {
    pub method: Method,
    pub n_sources: usize,
    /// Reported angle: the strongest of the estimated sources.
    pub angle_deg: Option<f64>,
    pub angles_deg: Vec<f64>,
    /// Joint estimator only.
    pub pairs: Vec<AngleDelay>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotResult {
    /// Slot start within the processed capture, samples.
    pub slot_offset: usize,
    pub sinr_db: f64,
    pub sync_peak: f64,
    pub pair_phase: Option<f64>,
    pub estimates: Vec<MethodEstimate>,
}

impl SlotResult {
    pub fn angle(&self, method: Method) -> Option<f64> {
        self.estimates
            .iter()
            .find(|e| e.method == method)
            .and_then(|e| e.angle_deg)
    }
}

/// A window that produced no slot estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotFailure {
    pub window_start: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotResult {
    pub slot_results: Vec<SlotResult>,
    pub failures: Vec<SlotFailure>,
    /// Per method, one flag per slot result: angle present and kept.
    pub kept_mask: BTreeMap<Method, Vec<bool>>,
    pub averaged_angles: BTreeMap<Method, Option<f64>>,
    pub sinr_kept: Vec<bool>,
    pub averaged_sinr: Option<f64>,
}

impl SnapshotResult {
    /// No slot survived for any method.
    pub fn is_empty(&self) -> bool {
        self.averaged_angles.values().all(Option::is_none)
    }
}

/// Receiver state shared across slots: waveform, FFT plans, array and
/// options.
#[derive(Debug, Clone)]
pub struct Receiver {
    cfg: WaveformConfig,
    waveform: SrsWaveform,
    ofdm: std::sync::Arc<Ofdm>,
    geom: UlaGeometry,
    opts: ReceiverOptions,
}

impl Receiver {
    pub fn new(cfg: &WaveformConfig, waveform: SrsWaveform, geom: UlaGeometry, opts: ReceiverOptions) -> Result<Self> {
        cfg.validate()?;
        geom.validate()?;
        if waveform.pilots.len() != cfg.n_pilots() || waveform.slot.len() != cfg.slot_len() {
            return Err(Error::Config("waveform does not match configuration".into()));
        }
        if opts.methods.is_empty() {
            return Err(Error::Config("no estimator selected".into()));
        }
        let max = match opts.sources {
            SourcePolicy::Fixed(d) | SourcePolicy::Auto(d) => d,
        };
        if max == 0 || max >= geom.n_elements {
            return Err(Error::SourceCount {
                requested: max,
                elements: geom.n_elements,
            });
        }
        if !(opts.detection_factor >= 0.0) {
            return Err(Error::Config("detection factor must be non-negative".into()));
        }
        Ok(Receiver {
            cfg: cfg.clone(),
            waveform,
            ofdm: std::sync::Arc::new(Ofdm::new(cfg)),
            geom,
            opts,
        })
    }

    pub fn config(&self) -> &WaveformConfig {
        &self.cfg
    }

    pub fn options(&self) -> &ReceiverOptions {
        &self.opts
    }

    pub fn geometry(&self) -> &UlaGeometry {
        &self.geom
    }

    fn tone_freq(&self) -> f64 {
        self.opts.tone_freq.unwrap_or_else(|| self.cfg.guard_tone_freq())
    }

    fn check_layout(&self, capture: &MultichannelCapture) -> Result<()> {
        capture.validate()?;
        if capture.layout.antennas.len() != self.geom.n_elements {
            return Err(Error::Layout(format!(
                "layout has {} antennas, array has {}",
                capture.layout.antennas.len(),
                self.geom.n_elements
            )));
        }
        if self.opts.sync_antenna >= capture.layout.antennas.len() {
            return Err(Error::Layout("sync antenna out of range".into()));
        }
        Ok(())
    }

    /// Processes the first full slot of a two-slot window.
    pub fn process_slot(&self, chunk: &MultichannelCapture) -> Result<SlotResult> {
        self.check_layout(chunk)?;
        let slot = self.cfg.slot_len();
        if chunk.len() < 2 * slot {
            return Err(Error::InsufficientSamples {
                needed: 2 * slot,
                available: chunk.len(),
            });
        }
        let sync_channel = chunk.layout.antennas[self.opts.sync_antenna];
        let sync = detect_slot_start(&self.cfg, &self.waveform.slot, &chunk.channels[sync_channel])?;
        let threshold = self.opts.detection_factor * sync.profile_median();
        if !(sync.peak_magnitude > threshold) {
            return Err(Error::SlotRejected {
                peak: sync.peak_magnitude,
                threshold,
            });
        }
        let offset = sync.peak_index;

        let (aligned, pair_phase) = match (self.opts.align_pairs, chunk.layout.reference) {
            (true, Some(_)) => {
                let phase = estimate_pair_offset_in_slot(chunk, &self.cfg, offset, self.tone_freq())?;
                (calibration::rotate_pair_b(chunk, -phase), Some(phase))
            }
            _ => (chunk.clone(), None),
        };

        let mut grids: Vec<ResourceGrid> = Vec::with_capacity(self.geom.n_elements);
        for &ch in &aligned.layout.antennas {
            grids.push(self.ofdm.demodulate(&aligned.channels[ch], offset)?);
        }
        let sinr_db = estimate_sinr_pooled(&grids, &self.cfg, SINR_CEILING_DB);
        let srs: Vec<DMatrix<Complex64>> = grids
            .iter()
            .map(|g| crate::waveform::extract_srs_symbols(g, &self.cfg))
            .collect::<Result<_>>()?;

        let estimates = self.estimate_all(&srs)?;
        Ok(SlotResult {
            slot_offset: offset,
            sinr_db,
            sync_peak: sync.peak_magnitude,
            pair_phase,
            estimates,
        })
    }

    /// Runs the configured estimators on per-antenna SRS symbols
    /// (`srs_symbols × n_pilots` each).
    pub fn estimate_all(&self, srs: &[DMatrix<Complex64>]) -> Result<Vec<MethodEstimate>> {
        let m = srs.len();
        let per = srs.first().map(|g| g.len()).unwrap_or(0);
        // column-major flattening keeps symbol-major order within a pilot
        let y = FrequencySnapshots::new(DMatrix::from_fn(m, per, |a, j| srs[a][j]))?;
        let h = ChannelEstimate::from_pilots(srs, &self.waveform.pilots)?;

        let antenna_sources = match self.opts.sources {
            SourcePolicy::Fixed(d) => d,
            SourcePolicy::Auto(max) => {
                let eig = hermitian_eig(&sample_covariance(&y).0)?;
                estimate_num_sources_with(&eig.eigenvalues, max, self.opts.source_threshold)
            }
        };

        Ok(self
            .opts
            .methods
            .iter()
            .map(|&method| {
                let outcome = match method {
                    Method::Music => music_estimate(&y, &self.geom, antenna_sources, self.opts.grid_step)
                        .map(|e| (antenna_sources, e.angles_deg, Vec::new())),
                    Method::Esprit => esprit_estimate(&y, &self.geom, antenna_sources)
                        .map(|e| (antenna_sources, e.angles_deg, Vec::new())),
                    Method::Jade => self.jade(&h),
                };
                match outcome {
                    Ok((n_sources, angles, pairs)) => {
                        let angle_deg = if method == Method::Jade {
                            jade_choice(&h, &self.geom, &pairs, self.cfg.n_pilots())
                        } else {
                            strongest_angle(&y, &self.geom, &angles)
                        };
                        MethodEstimate {
                            method,
                            n_sources,
                            angle_deg,
                            angles_deg: angles,
                            pairs,
                            error: None,
                        }
                    }
                    Err(e) => MethodEstimate {
                        method,
                        n_sources: 0,
                        angle_deg: None,
                        angles_deg: Vec::new(),
                        pairs: Vec::new(),
                        error: Some(e.to_string()),
                    },
                }
            })
            .collect())
    }

    fn jade(&self, h: &ChannelEstimate) -> Result<(usize, Vec<f64>, Vec<AngleDelay>)> {
        let d = match self.opts.sources {
            SourcePolicy::Fixed(d) => d,
            SourcePolicy::Auto(max) => {
                let eig = hankel_eigenvalues(h, self.opts.stacking)?;
                estimate_num_sources_with(&eig, max, self.opts.source_threshold)
            }
        };
        let est = jade_esprit_estimate(h, &self.geom, &self.cfg, d, self.opts.stacking)?;
        let angles = est.pairs.iter().map(|p| p.azimuth_deg).collect();
        Ok((d, angles, est.pairs))
    }

    /// Calibrates once, then walks the snapshot in two-slot windows,
    /// advancing the cursor past each processed slot.
    pub fn process_snapshot(&self, snapshot: &MultichannelCapture, table: &CalibrationTable) -> Result<SnapshotResult> {
        self.check_layout(snapshot)?;
        let slot = self.cfg.slot_len();
        if snapshot.len() < 2 * slot {
            return Err(Error::InsufficientSamples {
                needed: 2 * slot,
                available: snapshot.len(),
            });
        }
        let calibrated = apply_calibration(snapshot, table)?;
        let mut slot_results = Vec::new();
        let mut failures = Vec::new();
        let mut cursor = 0;
        while cursor + 2 * slot <= calibrated.len() {
            let window = calibrated.slice(cursor..cursor + 2 * slot)?;
            match self.process_slot(&window) {
                Ok(mut r) => {
                    let advance = r.slot_offset + slot;
                    r.slot_offset += cursor;
                    slot_results.push(r);
                    cursor += advance;
                }
                Err(e) => {
                    failures.push(SlotFailure {
                        window_start: cursor,
                        reason: e.to_string(),
                    });
                    cursor += slot;
                }
            }
        }
        Ok(summarise(slot_results, failures, &self.opts.methods))
    }

    /// One result per whole snapshot of `snapshot_len` samples; a trailing
    /// partial block is dropped. Snapshots run in parallel.
    pub fn process_capture(
        &self,
        capture: &MultichannelCapture,
        snapshot_len: usize,
        table: &CalibrationTable,
    ) -> Result<Vec<SnapshotResult>> {
        if snapshot_len < 2 * self.cfg.slot_len() {
            return Err(Error::Config(format!(
                "snapshot of {snapshot_len} samples is shorter than two slots"
            )));
        }
        let n = capture.len() / snapshot_len;
        (0..n)
            .into_par_iter()
            .map(|i| {
                let block = capture.slice(i * snapshot_len..(i + 1) * snapshot_len)?;
                self.process_snapshot(&block, table)
            })
            .collect()
    }
}

fn jade_choice(h: &ChannelEstimate, geom: &UlaGeometry, pairs: &[AngleDelay], period: usize) -> Option<f64> {
    let est = crate::subspace::AngleDelayEstimate {
        pairs: pairs.to_vec(),
        delay_period: period,
        missing: 0,
    };
    match pairs.len() {
        0 => None,
        _ => est.strongest_azimuth(h, geom),
    }
}

fn summarise(slot_results: Vec<SlotResult>, failures: Vec<SlotFailure>, methods: &[Method]) -> SnapshotResult {
    let mut kept_mask = BTreeMap::new();
    let mut averaged_angles = BTreeMap::new();
    for &method in methods {
        let angles: Vec<Option<f64>> = slot_results.iter().map(|r| r.angle(method)).collect();
        let (mask, avg) = filter_and_average(&angles);
        kept_mask.insert(method, mask);
        averaged_angles.insert(method, avg);
    }
    let sinrs: Vec<Option<f64>> = slot_results
        .iter()
        .map(|r| r.sinr_db.is_finite().then_some(r.sinr_db))
        .collect();
    let (sinr_kept, averaged_sinr) = filter_and_average(&sinrs);
    SnapshotResult {
        slot_results,
        failures,
        kept_mask,
        averaged_angles,
        sinr_kept,
        averaged_sinr,
    }
}

fn filter_and_average(values: &[Option<f64>]) -> (Vec<bool>, Option<f64>) {
    let present: Vec<f64> = values.iter().flatten().copied().collect();
    let filtered = mad_filter(&present);
    let mut flags = filtered.mask.iter();
    let mask = values
        .iter()
        .map(|v| v.is_some() && *flags.next().expect("one flag per present value"))
        .collect();
    let avg = (!filtered.kept.is_empty()).then(|| mean(&filtered.kept));
    (mask, avg)
}
