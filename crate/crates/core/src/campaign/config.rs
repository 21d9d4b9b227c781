use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Deserialize;

use crate::channel::SceneParams;
use crate::error::{Error, Result};
use crate::subspace::{Method, DEFAULT_GRID_STEP, DEFAULT_STACKING};
use crate::waveform::ConfigId;

pub const DEFAULT_TRIALS: usize = 200;
pub const DEFAULT_SNR_DB: f64 = 20.0;

/// Per-resource-element SNR of the simulated link, dB. `inf` disables
/// noise.
#[derive(Debug, Clone, PartialEq)]
pub enum SnrPolicy {
    Fixed(f64),
    PerDistance(Vec<f64>),
}

impl SnrPolicy {
    pub fn at(&self, distance_index: usize) -> f64 {
        match self {
            SnrPolicy::Fixed(v) => *v,
            SnrPolicy::PerDistance(v) => v[distance_index],
        }
    }
}

/// Settings for the `simulate` and `estimate` stages.
#[derive(Debug, Clone, PartialEq)]
pub struct CaptureSettings {
    pub duration_ms: f64,
    pub snapshot_ms: f64,
    /// Tone amplitude relative to the RMS amplitude of the occupied signal.
    pub tone_amplitude: f64,
    pub impairments: bool,
}

impl Default for CaptureSettings {
    fn default() -> Self {
        CaptureSettings {
            duration_ms: 10.0,
            snapshot_ms: 3.0,
            tone_amplitude: 1.0,
            impairments: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputPaths {
    pub csv: PathBuf,
    pub plot_script: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignConfig {
    pub waveform: ConfigId,
    pub n_elements: usize,
    pub scene: SceneParams,
    pub distances: Vec<f64>,
    pub angle_deg: f64,
    pub snr: SnrPolicy,
    pub n_trials: usize,
    pub algorithms: Vec<Method>,
    pub seed: u64,
    pub grid_step: f64,
    pub stacking: usize,
    pub max_sources: usize,
    pub capture: CaptureSettings,
    pub output: OutputPaths,
}

impl CampaignConfig {
    /// Defaults around one waveform and a distance list.
    pub fn new(waveform: ConfigId, distances: Vec<f64>) -> Self {
        CampaignConfig {
            waveform,
            n_elements: 3,
            scene: SceneParams::default(),
            distances,
            angle_deg: 0.0,
            snr: SnrPolicy::Fixed(DEFAULT_SNR_DB),
            n_trials: DEFAULT_TRIALS,
            algorithms: Method::ALL.to_vec(),
            seed: 0,
            grid_step: DEFAULT_GRID_STEP,
            stacking: DEFAULT_STACKING,
            max_sources: 2,
            capture: CaptureSettings::default(),
            output: OutputPaths {
                csv: PathBuf::from("rmse.csv"),
                plot_script: PathBuf::from("plot_rmse.py"),
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, msg: &str| Err(Error::Config(format!("{key}: {msg}")));
        if self.distances.is_empty() {
            return bad("distances", "at least one distance required");
        }
        if let Some(d) = self.distances.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
            return bad("distances", &format!("{d} is not a positive distance"));
        }
        if self.distances.windows(2).any(|w| w[1] <= w[0]) {
            return bad("distances", "must be strictly ascending");
        }
        if !(self.angle_deg.abs() < 90.0) {
            return bad("angle_deg", "must lie in (-90, 90)");
        }
        match &self.snr {
            SnrPolicy::Fixed(v) if v.is_nan() || *v == f64::NEG_INFINITY => return bad("snr_db", "must be a number or inf"),
            SnrPolicy::PerDistance(v) if v.len() != self.distances.len() => {
                return bad("snr_db", "per-distance list must match distances")
            }
            SnrPolicy::PerDistance(v) if v.iter().any(|s| s.is_nan() || *s == f64::NEG_INFINITY) => {
                return bad("snr_db", "must be numbers or inf")
            }
            _ => {}
        }
        if self.n_trials == 0 {
            return bad("n_trials", "must be at least 1");
        }
        if self.algorithms.is_empty() {
            return bad("algorithms", "at least one algorithm required");
        }
        if !(self.grid_step > 0.0 && self.grid_step < 90.0) {
            return bad("grid_step", "must lie in (0, 90)");
        }
        if self.stacking < 2 {
            return bad("stacking", "must be at least 2");
        }
        if self.n_elements < 2 {
            return bad("n_elements", "must be at least 2");
        }
        if self.max_sources == 0 || self.max_sources >= self.n_elements {
            return bad("max_sources", "must lie in [1, n_elements - 1]");
        }
        let s = &self.scene;
        if !(s.tx_height > 0.0 && s.rx_height > 0.0) {
            return bad("scene", "heights must be positive");
        }
        if !(s.reflect_min > 0.0 && s.reflect_max > s.reflect_min && s.wall_height > 0.0) {
            return bad("scene", "wall window must satisfy 0 < reflect_min < reflect_max, height > 0");
        }
        let c = &self.capture;
        if !(c.snapshot_ms > 0.0 && c.duration_ms >= c.snapshot_ms) {
            return bad("capture", "need 0 < snapshot_ms <= duration_ms");
        }
        if !(c.tone_amplitude >= 0.0 && c.tone_amplitude.is_finite()) {
            return bad("capture.tone_amplitude", "must be non-negative");
        }
        Ok(())
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Number {
    Int(i64),
    Float(f64),
}

impl Number {
    fn value(&self) -> f64 {
        match *self {
            Number::Int(i) => i as f64,
            Number::Float(f) => f,
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawSnr {
    One(Number),
    List(Vec<Number>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScene {
    tx_height: Option<Number>,
    rx_height: Option<Number>,
    wall_standoff: Option<Number>,
    reflect_min: Option<Number>,
    reflect_max: Option<Number>,
    wall_height: Option<Number>,
    ground_reflection: Option<Number>,
    wall_reflection: Option<Number>,
    wall: Option<bool>,
    ground: Option<bool>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCapture {
    duration_ms: Option<Number>,
    snapshot_ms: Option<Number>,
    tone_amplitude: Option<Number>,
    impairments: Option<bool>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    csv: Option<PathBuf>,
    plot_script: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    waveform: String,
    distances: Vec<Number>,
    angle_deg: Option<Number>,
    snr_db: Option<RawSnr>,
    n_trials: Option<i64>,
    algorithms: Option<Vec<String>>,
    seed: Option<i64>,
    grid_step: Option<Number>,
    stacking: Option<i64>,
    n_elements: Option<i64>,
    max_sources: Option<i64>,
    scene: Option<RawScene>,
    capture: Option<RawCapture>,
    output: Option<RawOutput>,
}

fn non_negative(key: &str, v: i64) -> Result<usize> {
    usize::try_from(v).map_err(|_| Error::Config(format!("{key}: {v} must be non-negative")))
}

fn set(target: &mut f64, v: Option<Number>) {
    if let Some(n) = v {
        *target = n.value();
    }
}

/// Parses campaign TOML text. Unknown and duplicate keys are rejected;
/// omitted keys take their defaults.
pub fn parse_config_str(text: &str) -> Result<CampaignConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let waveform: ConfigId = raw
        .waveform
        .parse()
        .map_err(|_| Error::Config(format!("waveform: unknown configuration {:?}", raw.waveform)))?;
    let mut cfg = CampaignConfig::new(waveform, raw.distances.iter().map(Number::value).collect());
    set(&mut cfg.angle_deg, raw.angle_deg);
    if let Some(snr) = raw.snr_db {
        cfg.snr = match snr {
            RawSnr::One(n) => SnrPolicy::Fixed(n.value()),
            RawSnr::List(v) => SnrPolicy::PerDistance(v.iter().map(Number::value).collect()),
        };
    }
    if let Some(n) = raw.n_trials {
        cfg.n_trials = non_negative("n_trials", n)?;
    }
    if let Some(list) = raw.algorithms {
        let mut methods = Vec::new();
        for name in list {
            let m: Method = name
                .parse()
                .map_err(|_| Error::Config(format!("algorithms: unknown algorithm {name:?}")))?;
            if !methods.contains(&m) {
                methods.push(m);
            }
        }
        cfg.algorithms = methods;
    }
    if let Some(s) = raw.seed {
        cfg.seed = u64::try_from(s).map_err(|_| Error::Config(format!("seed: {s} must be non-negative")))?;
    }
    set(&mut cfg.grid_step, raw.grid_step);
    if let Some(m) = raw.stacking {
        cfg.stacking = non_negative("stacking", m)?;
    }
    if let Some(m) = raw.n_elements {
        cfg.n_elements = non_negative("n_elements", m)?;
    }
    if let Some(m) = raw.max_sources {
        cfg.max_sources = non_negative("max_sources", m)?;
    }
    if let Some(s) = raw.scene {
        let p = &mut cfg.scene;
        set(&mut p.tx_height, s.tx_height);
        set(&mut p.rx_height, s.rx_height);
        set(&mut p.wall_standoff, s.wall_standoff);
        set(&mut p.reflect_min, s.reflect_min);
        set(&mut p.reflect_max, s.reflect_max);
        set(&mut p.wall_height, s.wall_height);
        if let Some(g) = s.ground_reflection {
            p.ground_reflection = Complex64::new(g.value(), 0.0);
        }
        if let Some(g) = s.wall_reflection {
            p.wall_reflection = Complex64::new(g.value(), 0.0);
        }
        if let Some(w) = s.wall {
            p.with_wall = w;
        }
        if let Some(g) = s.ground {
            p.with_ground = g;
        }
    }
    if let Some(c) = raw.capture {
        let t = &mut cfg.capture;
        set(&mut t.duration_ms, c.duration_ms);
        set(&mut t.snapshot_ms, c.snapshot_ms);
        set(&mut t.tone_amplitude, c.tone_amplitude);
        if let Some(i) = c.impairments {
            t.impairments = i;
        }
    }
    if let Some(o) = raw.output {
        if let Some(p) = o.csv {
            cfg.output.csv = p;
        }
        if let Some(p) = o.plot_script {
            cfg.output.plot_script = p;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<CampaignConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}
