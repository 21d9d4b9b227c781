//! Multichannel IQ recordings: one `<stem>.ch<k>.iq` file of interleaved
//! little-endian `f32` I,Q pairs per channel, plus a `<stem>.meta` sidecar
//! of `key = value` lines.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::channel::{CaptureLayout, MultichannelCapture};
use crate::error::{Error, Result};

const BYTES_PER_SAMPLE: usize = 8;

fn with_suffix(stem: &Path, suffix: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn channel_path(stem: &Path, k: usize) -> PathBuf {
    with_suffix(stem, &format!(".ch{k}.iq"))
}

pub fn meta_path(stem: &Path) -> PathBuf {
    with_suffix(stem, ".meta")
}

pub fn calibration_path(stem: &Path) -> PathBuf {
    with_suffix(stem, ".cal")
}

/// Writes every channel and the sidecar. `extra` entries are appended to
/// the sidecar after the standard keys.
pub fn write_iq_with(capture: &MultichannelCapture, stem: &Path, extra: &[(&str, String)]) -> Result<()> {
    capture.validate()?;
    if let Some(dir) = stem.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    for (k, ch) in capture.channels.iter().enumerate() {
        let path = channel_path(stem, k);
        let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = BufWriter::new(file);
        for z in ch {
            w.write_all(&(z.re as f32).to_le_bytes())
                .and_then(|_| w.write_all(&(z.im as f32).to_le_bytes()))
                .map_err(|e| Error::io(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
    }
    let mut meta = format!(
        "sample_rate_hz = {:?}\ncarrier_freq_hz = {:?}\nn_channels = {}\nn_samples = {}\nlayout = {}\ncreated_utc = {}\n",
        capture.sample_rate,
        capture.carrier_freq,
        capture.n_channels(),
        capture.len(),
        capture.layout,
        chrono::Utc::now().format("%Y-%m-%dT%H:%M:%SZ"),
    );
    for (k, v) in extra {
        meta.push_str(&format!("{k} = {v}\n"));
    }
    let path = meta_path(stem);
    fs::write(&path, meta).map_err(|e| Error::io(&path, e))
}

pub fn write_iq(capture: &MultichannelCapture, stem: &Path) -> Result<()> {
    write_iq_with(capture, stem, &[])
}

/// Parsed sidecar: the standard keys plus anything else it carried.
#[derive(Debug, Clone, PartialEq)]
pub struct IqMetadata {
    pub sample_rate: f64,
    pub carrier_freq: f64,
    pub n_channels: usize,
    pub n_samples: usize,
    pub layout: CaptureLayout,
    pub created_utc: String,
    pub extra: BTreeMap<String, String>,
}

pub fn read_metadata(stem: &Path) -> Result<IqMetadata> {
    let path = meta_path(stem);
    if !path.exists() {
        return Err(Error::MissingSidecar(path));
    }
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let err = |message: String| Error::Sidecar {
        path: path.clone(),
        message,
    };
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| err(format!("line {}: expected key = value", i + 1)))?;
        if map.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
            return Err(err(format!("line {}: duplicate key {:?}", i + 1, k.trim())));
        }
    }
    let mut take = |key: &str| map.remove(key).ok_or_else(|| err(format!("missing key {key}")));
    let num = |key: &str, v: String| v.parse::<f64>().map_err(|_| err(format!("{key}: bad number {v:?}")));
    let int = |key: &str, v: String| v.parse::<usize>().map_err(|_| err(format!("{key}: bad integer {v:?}")));
    let sample_rate = num("sample_rate_hz", take("sample_rate_hz")?)?;
    let carrier_freq = num("carrier_freq_hz", take("carrier_freq_hz")?)?;
    let n_channels = int("n_channels", take("n_channels")?)?;
    let n_samples = int("n_samples", take("n_samples")?)?;
    let layout: CaptureLayout = take("layout")?
        .parse()
        .map_err(|e: Error| err(e.to_string()))?;
    let created_utc = take("created_utc")?;
    if layout.n_channels() != n_channels {
        return Err(err(format!(
            "layout lists {} channels, n_channels is {n_channels}",
            layout.n_channels()
        )));
    }
    Ok(IqMetadata {
        sample_rate,
        carrier_freq,
        n_channels,
        n_samples,
        layout,
        created_utc,
        extra: map,
    })
}

pub fn read_iq(stem: &Path) -> Result<MultichannelCapture> {
    read_iq_with_metadata(stem).map(|(c, _)| c)
}

pub fn read_iq_with_metadata(stem: &Path) -> Result<(MultichannelCapture, IqMetadata)> {
    let meta = read_metadata(stem)?;
    let mut channels = Vec::with_capacity(meta.n_channels);
    for k in 0..meta.n_channels {
        let path = channel_path(stem, k);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        if bytes.len() % BYTES_PER_SAMPLE != 0 {
            return Err(Error::Truncated { path, len: bytes.len() as u64 });
        }
        let n = bytes.len() / BYTES_PER_SAMPLE;
        if n != meta.n_samples {
            return Err(Error::Inconsistent {
                path,
                declared: meta.n_samples,
                actual: n,
            });
        }
        let samples = bytes
            .chunks_exact(BYTES_PER_SAMPLE)
            .map(|c| {
                let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
                let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
                Complex64::new(re as f64, im as f64)
            })
            .collect();
        channels.push(samples);
    }
    let capture = MultichannelCapture::new(channels, meta.sample_rate, meta.carrier_freq, meta.layout.clone())?;
    Ok((capture, meta))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn capture() -> MultichannelCapture {
        let ch = |s: f32| -> Vec<Complex64> {
            (0..100)
                .map(|i| Complex64::new((i as f32 * s).sin() as f64, (i as f32 * 0.5 - 7.0) as f64))
                .collect()
        };
        MultichannelCapture::new(
            vec![ch(0.1), ch(0.2), ch(0.3), ch(0.4)],
            30.72e6,
            2.4e9,
            CaptureLayout::split_lo_default(),
        )
        .unwrap()
    }

    #[test]
    fn roundtrip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("rec");
        let c = capture();
        write_iq_with(&c, &stem, &[("waveform", "I".into())]).unwrap();
        let (back, meta) = read_iq_with_metadata(&stem).unwrap();
        assert_eq!(back, c);
        assert_eq!(meta.extra["waveform"], "I");
        assert!(meta.created_utc.ends_with('Z'));
    }

    #[test]
    fn distinct_failures() {
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("rec");
        assert!(matches!(read_iq(&stem), Err(Error::MissingSidecar(_))));
        write_iq(&capture(), &stem).unwrap();

        let ch1 = channel_path(&stem, 1);
        let bytes = fs::read(&ch1).unwrap();
        fs::write(&ch1, &bytes[..bytes.len() - 4]).unwrap();
        assert!(matches!(read_iq(&stem), Err(Error::Truncated { .. })));

        fs::write(&ch1, &bytes[..bytes.len() - 8]).unwrap();
        assert!(matches!(read_iq(&stem), Err(Error::Inconsistent { declared: 100, actual: 99, .. })));

        fs::write(&ch1, &bytes).unwrap();
        let meta = fs::read_to_string(meta_path(&stem)).unwrap();
        fs::write(meta_path(&stem), meta.replace("n_samples = 100", "n_samples = 101")).unwrap();
        assert!(matches!(read_iq(&stem), Err(Error::Inconsistent { declared: 101, .. })));
        fs::write(meta_path(&stem), meta.replace("n_channels = 4", "n_channels = 3")).unwrap();
        assert!(matches!(read_iq(&stem), Err(Error::Sidecar { .. })));
    }
}
