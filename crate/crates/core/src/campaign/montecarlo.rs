use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{CampaignConfig, SnrPolicy};
use super::scenario::{add_re_noise, derive_seed, scene_paths, synthesize};
use crate::channel::UlaGeometry;
use crate::error::{Error, Result};
use crate::receiver::{Receiver, ReceiverOptions, SourcePolicy};
use crate::subspace::Method;
use crate::waveform::SrsWaveform;

pub const CSV_HEADER: &str = "distance_m,algorithm,rmse_deg,bias_deg,mean_sinr_db,n_valid";

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignRow {
    pub distance_m: f64,
    pub algorithm: Method,
    pub rmse_deg: f64,
    pub bias_deg: f64,
    pub mean_sinr_db: f64,
    pub n_valid: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CampaignResult {
    pub rows: Vec<CampaignRow>,
}

impl CampaignResult {
    pub fn row(&self, distance_m: f64, algorithm: Method) -> Option<&CampaignRow> {
        self.rows
            .iter()
            .find(|r| r.distance_m == distance_m && r.algorithm == algorithm)
    }
}

/// What one trial contributes: SINR and one angle per configured method.
#[derive(Debug, Clone, PartialEq)]
struct TrialOutcome {
    sinr_db: f64,
    angles: Vec<Option<f64>>,
}

/// Builds the receiver a campaign uses.
pub fn campaign_receiver(cfg: &CampaignConfig) -> Result<Receiver> {
    let wf = cfg.waveform.waveform();
    let geom = UlaGeometry::half_wavelength(cfg.n_elements, wf.carrier_freq)?;
    let opts = ReceiverOptions {
        methods: cfg.algorithms.clone(),
        sources: SourcePolicy::Auto(cfg.max_sources),
        grid_step: cfg.grid_step,
        stacking: cfg.stacking,
        ..ReceiverOptions::default()
    };
    Receiver::new(&wf, SrsWaveform::default_for(&wf)?, geom, opts)
}

/// Monte-Carlo RMSE per distance and algorithm.
///
/// Each distance propagates a three-slot periodic stream once; each trial
/// takes a two-slot window at a random offset, adds fresh noise and runs
/// the receiver on it. Trial randomness derives only from the master seed
/// and the (distance, trial) indices, so results do not depend on
/// scheduling.
pub fn run_montecarlo(cfg: &CampaignConfig) -> Result<CampaignResult> {
    cfg.validate()?;
    let receiver = campaign_receiver(cfg)?;
    let wf = receiver.config().clone();
    let geom = receiver.geometry().clone();
    let waveform = SrsWaveform::default_for(&wf)?;
    let slot = wf.slot_len();

    let mut rows = Vec::new();
    for (di, &distance) in cfg.distances.iter().enumerate() {
        let paths = scene_paths(&cfg.scene, distance, cfg.angle_deg, &geom)?;
        let truth = paths[0].azimuth_deg;
        let stream = synthesize(&waveform, &paths, &geom, 3)?;
        let snr = cfg.snr.at(di);

        let outcomes: Vec<Option<TrialOutcome>> = (0..cfg.n_trials)
            .into_par_iter()
            .map(|t| -> Result<Option<TrialOutcome>> {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, di as u64, t as u64));
                let offset = rng.random_range(0..slot);
                let noise_seed: u64 = rng.random();
                let window = stream.slice(offset..offset + 2 * slot)?;
                let noisy = add_re_noise(&window, &wf, snr, noise_seed);
                Ok(receiver.process_slot(&noisy).ok().map(|r| TrialOutcome {
                    sinr_db: r.sinr_db,
                    angles: cfg.algorithms.iter().map(|&m| r.angle(m)).collect(),
                }))
            })
            .collect::<Result<_>>()?;

        let processed: Vec<&TrialOutcome> = outcomes.iter().flatten().collect();
        let sinrs: Vec<f64> = processed.iter().map(|o| o.sinr_db).filter(|s| s.is_finite()).collect();
        let mean_sinr_db = if sinrs.is_empty() {
            f64::NAN
        } else {
            sinrs.iter().sum::<f64>() / sinrs.len() as f64
        };
        for (mi, &algorithm) in cfg.algorithms.iter().enumerate() {
            let errors: Vec<f64> = processed.iter().filter_map(|o| o.angles[mi]).map(|a| a - truth).collect();
            let n = errors.len();
            let (rmse_deg, bias_deg) = if n == 0 {
                (f64::NAN, f64::NAN)
            } else {
                let sq = errors.iter().map(|e| e * e).sum::<f64>() / n as f64;
                (sq.sqrt(), errors.iter().sum::<f64>() / n as f64)
            };
            rows.push(CampaignRow {
                distance_m: distance,
                algorithm,
                rmse_deg,
                bias_deg,
                mean_sinr_db,
                n_valid: n,
            });
        }
    }
    Ok(CampaignResult { rows })
}

pub fn results_csv(result: &CampaignResult) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in &result.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.distance_m, r.algorithm, r.rmse_deg, r.bias_deg, r.mean_sinr_db, r.n_valid
        );
    }
    out
}

/// Inverse of [`results_csv`].
pub fn parse_results_csv(text: &str) -> Result<CampaignResult> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::Config("results CSV header mismatch".into()));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').collect();
        let bad = || Error::Config(format!("results CSV row {}: {line:?}", i + 2));
        if f.len() != 6 {
            return Err(bad());
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
        rows.push(CampaignRow {
            distance_m: num(f[0])?,
            algorithm: f[1].parse()?,
            rmse_deg: num(f[2])?,
            bias_deg: num(f[3])?,
            mean_sinr_db: num(f[4])?,
            n_valid: f[5].parse().map_err(|_| bad())?,
        });
    }
    Ok(CampaignResult { rows })
}

/// Python/matplotlib script plotting RMSE against distance per algorithm.
pub fn plot_script(csv_name: &str, title: &str) -> String {
    format!(
        r#"#!/usr/bin/env python3
# RMSE versus distance, one line per algorithm.
import csv
import sys
from collections import defaultdict

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "{csv_name}"
series = defaultdict(list)
with open(path, newline="") as f:
    for row in csv.DictReader(f):
        series[row["algorithm"]].append((float(row["distance_m"]), float(row["rmse_deg"])))

fig, ax = plt.subplots(figsize=(6, 4))
for name, points in sorted(series.items()):
    points.sort()
    ax.plot([p[0] for p in points], [p[1] for p in points], marker="o", label=name)
ax.set_xlabel("Distance (m)")
ax.set_ylabel("RMSE (deg)")
ax.set_title("{title}")
ax.grid(True, alpha=0.3)
ax.legend()
fig.tight_layout()
out = path.rsplit(".", 1)[0] + ".png"
fig.savefig(out, dpi=150)
print(out)
"#
    )
}

/// `key = value` description of the run behind a results CSV. The SNR is a
/// free simulation parameter and is labelled as such.
pub fn campaign_metadata(cfg: &CampaignConfig) -> String {
    let snr = match &cfg.snr {
        SnrPolicy::Fixed(v) => format!("{v}"),
        SnrPolicy::PerDistance(v) => v.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(","),
    };
    let list = |v: &[f64]| v.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(",");
    let algorithms: Vec<&str> = cfg.algorithms.iter().map(|m| m.as_str()).collect();
    let wf = cfg.waveform.waveform();
    format!(
        "waveform = {}\ncarrier_freq_hz = {:?}\nn_elements = {}\ndistances_m = {}\nangle_deg = {}\n\
         snr_db = {snr}\nsnr_definition = per resource element, free simulation parameter\n\
         n_trials = {}\nseed = {}\nalgorithms = {}\nwall = {}\nground = {}\n",
        cfg.waveform,
        wf.carrier_freq,
        cfg.n_elements,
        list(&cfg.distances),
        cfg.angle_deg,
        cfg.n_trials,
        cfg.seed,
        algorithms.join(","),
        cfg.scene.with_wall,
        cfg.scene.with_ground,
    )
}

/// Writes the CSV and the plot script next to it.
pub fn emit_results(result: &CampaignResult, csv_path: &Path, script_path: &Path, title: &str) -> Result<()> {
    for p in [csv_path, script_path] {
        if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    fs::write(csv_path, results_csv(result)).map_err(|e| Error::io(csv_path, e))?;
    let csv_name = csv_path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    fs::write(script_path, plot_script(&csv_name, title)).map_err(|e| Error::io(script_path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveform::ConfigId;

    fn row(d: f64, m: Method, rmse: f64) -> CampaignRow {
        CampaignRow {
            distance_m: d,
            algorithm: m,
            rmse_deg: rmse,
            bias_deg: -rmse / 3.0,
            mean_sinr_db: 19.123456789012345,
            n_valid: 200,
        }
    }

    #[test]
    fn empty_result_is_header_only() {
        assert_eq!(results_csv(&CampaignResult::default()), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn csv_roundtrip_is_exact() {
        let mut rows = Vec::new();
        for d in 0..9 {
            for m in Method::ALL {
                rows.push(row(10.0 + 5.0 * d as f64, m, 0.1 + 1e-17 * d as f64 + 0.3 / 7.0));
            }
        }
        let r = CampaignResult { rows };
        let text = results_csv(&r);
        assert_eq!(text.lines().count(), 28);
        assert_eq!(parse_results_csv(&text).unwrap(), r);
    }

    #[test]
    fn noiseless_los_is_exact() {
        let mut cfg = CampaignConfig::new(ConfigId::I, vec![15.0]);
        cfg.scene.with_wall = false;
        cfg.scene.with_ground = false;
        cfg.snr = crate::campaign::SnrPolicy::Fixed(f64::INFINITY);
        cfg.n_trials = 4;
        cfg.angle_deg = 20.0;
        let r = run_montecarlo(&cfg).unwrap();
        assert_eq!(r.rows.len(), 3);
        for row in &r.rows {
            assert_eq!(row.n_valid, 4);
            assert!(row.rmse_deg <= 1e-3, "{row:?}");
        }
    }

    #[test]
    fn metadata_labels_snr() {
        let mut cfg = CampaignConfig::new(ConfigId::III, vec![10.0, 20.0]);
        cfg.snr = SnrPolicy::PerDistance(vec![25.0, 12.5]);
        let m = campaign_metadata(&cfg);
        assert!(m.contains("waveform = III\n"));
        assert!(m.contains("distances_m = 10,20\n"));
        assert!(m.contains("snr_db = 25,12.5\n"));
        assert!(m.contains("free simulation parameter"));
    }

    #[test]
    fn emit_writes_both_files() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("a/rmse.csv");
        let py = dir.path().join("a/plot.py");
        emit_results(&CampaignResult { rows: vec![row(10.0, Method::Music, 0.2)] }, &csv, &py, "t").unwrap();
        assert!(fs::read_to_string(&py).unwrap().contains("rmse.csv"));
        assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), 2);
    }
}
