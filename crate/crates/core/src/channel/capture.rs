use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Local-oscillator pair a receiver channel belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoPair {
    A,
    B,
}

/// Channels that observe the common calibration tone, one per LO pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReferenceTaps {
    pub pair_a: usize,
    pub pair_b: usize,
}

/// Which capture channels are array elements and which carry the tone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaptureLayout {
    /// Array element channels, element 0 first.
    pub antennas: Vec<usize>,
    /// LO pair of every channel.
    pub pairs: Vec<LoPair>,
    pub reference: Option<ReferenceTaps>,
}

impl CaptureLayout {
    /// `n` array channels on one LO, no reference taps.
    pub fn antennas_only(n: usize) -> Self {
        CaptureLayout {
            antennas: (0..n).collect(),
            pairs: vec![LoPair::A; n],
            reference: None,
        }
    }

    /// Four-channel receiver: channels 0 and 1 on pair A, 2 and 3 on pair B.
    /// Channels 0–2 are the array; channel 3 is a dedicated pair-B tap and
    /// the pair-A tone is observed on channel 1.
    pub fn split_lo_default() -> Self {
        CaptureLayout {
            antennas: vec![0, 1, 2],
            pairs: vec![LoPair::A, LoPair::A, LoPair::B, LoPair::B],
            reference: Some(ReferenceTaps { pair_a: 1, pair_b: 3 }),
        }
    }

    pub fn n_channels(&self) -> usize {
        self.pairs.len()
    }

    pub fn validate(&self, n_channels: usize) -> Result<()> {
        if self.pairs.len() != n_channels {
            return Err(Error::Layout(format!(
                "pairing lists {} channels, capture has {n_channels}",
                self.pairs.len()
            )));
        }
        if self.antennas.is_empty() {
            return Err(Error::Layout("at least one antenna channel required".into()));
        }
        let mut seen = vec![false; n_channels];
        for &a in &self.antennas {
            if a >= n_channels {
                return Err(Error::Layout(format!("antenna channel {a} out of range")));
            }
            if std::mem::replace(&mut seen[a], true) {
                return Err(Error::Layout(format!("antenna channel {a} listed twice")));
            }
        }
        if let Some(taps) = self.reference {
            if taps.pair_a >= n_channels || taps.pair_b >= n_channels {
                return Err(Error::Layout("reference tap out of range".into()));
            }
            if self.pairs[taps.pair_a] != LoPair::A || self.pairs[taps.pair_b] != LoPair::B {
                return Err(Error::Layout(
                    "reference taps must sit on pair A and pair B respectively".into(),
                ));
            }
        }
        Ok(())
    }
}

/// `antennas=0,1,2;pairs=AABB;ref=1,3` (or `ref=none`).
impl fmt::Display for CaptureLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ants: Vec<String> = self.antennas.iter().map(|a| a.to_string()).collect();
        let pairs: String = self
            .pairs
            .iter()
            .map(|p| match p {
                LoPair::A => 'A',
                LoPair::B => 'B',
            })
            .collect();
        write!(f, "antennas={};pairs={};ref=", ants.join(","), pairs)?;
        match self.reference {
            Some(t) => write!(f, "{},{}", t.pair_a, t.pair_b),
            None => f.write_str("none"),
        }
    }
}

impl FromStr for CaptureLayout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |m: &str| Error::Layout(format!("{m} in layout {s:?}"));
        let mut antennas = None;
        let mut pairs = None;
        let mut reference = None;
        for part in s.trim().split(';') {
            let (key, value) = part.split_once('=').ok_or_else(|| bad("missing '='"))?;
            match key.trim() {
                "antennas" => {
                    let list = value
                        .split(',')
                        .map(|v| v.trim().parse::<usize>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|_| bad("bad antenna index"))?;
                    antennas = Some(list);
                }
                "pairs" => {
                    let list = value
                        .trim()
                        .chars()
                        .map(|c| match c {
                            'A' => Ok(LoPair::A),
                            'B' => Ok(LoPair::B),
                            _ => Err(bad("pair must be A or B")),
                        })
                        .collect::<Result<Vec<_>>>()?;
                    pairs = Some(list);
                }
                "ref" => {
                    let v = value.trim();
                    reference = Some(if v == "none" {
                        None
                    } else {
                        let (a, b) = v.split_once(',').ok_or_else(|| bad("ref needs two taps"))?;
                        Some(ReferenceTaps {
                            pair_a: a.trim().parse().map_err(|_| bad("bad tap"))?,
                            pair_b: b.trim().parse().map_err(|_| bad("bad tap"))?,
                        })
                    });
                }
                other => return Err(bad(&format!("unknown key {other:?}"))),
            }
        }
        let layout = CaptureLayout {
            antennas: antennas.ok_or_else(|| bad("missing antennas"))?,
            pairs: pairs.ok_or_else(|| bad("missing pairs"))?,
            reference: reference.ok_or_else(|| bad("missing ref"))?,
        };
        layout.validate(layout.pairs.len())?;
        Ok(layout)
    }
}

/// Time-aligned complex baseband streams from a coherent receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct MultichannelCapture {
    pub channels: Vec<Vec<Complex64>>,
    pub sample_rate: f64,
    pub carrier_freq: f64,
    pub layout: CaptureLayout,
}

impl MultichannelCapture {
    pub fn new(
        channels: Vec<Vec<Complex64>>,
        sample_rate: f64,
        carrier_freq: f64,
        layout: CaptureLayout,
    ) -> Result<Self> {
        let cap = MultichannelCapture {
            channels,
            sample_rate,
            carrier_freq,
            layout,
        };
        cap.validate()?;
        Ok(cap)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.channels.first().map_or(0, Vec::len);
        if let Some(bad) = self.channels.iter().find(|c| c.len() != n) {
            return Err(Error::Dimension {
                what: "channel length",
                expected: n,
                actual: bad.len(),
            });
        }
        self.layout.validate(self.channels.len())
    }

    /// Samples per channel.
    pub fn len(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    /// Copy of a sample range of every channel.
    pub fn slice(&self, range: Range<usize>) -> Result<MultichannelCapture> {
        if range.end > self.len() || range.start > range.end {
            return Err(Error::InsufficientSamples {
                needed: range.end,
                available: self.len(),
            });
        }
        Ok(MultichannelCapture {
            channels: self.channels.iter().map(|c| c[range.clone()].to_vec()).collect(),
            sample_rate: self.sample_rate,
            carrier_freq: self.carrier_freq,
            layout: self.layout.clone(),
        })
    }

    /// Re-homes the channels of an antennas-only capture into `layout`,
    /// leaving non-antenna channels zero.
    pub fn with_layout(&self, layout: CaptureLayout) -> Result<MultichannelCapture> {
        if layout.antennas.len() != self.layout.antennas.len() {
            return Err(Error::Layout(format!(
                "layout has {} antennas, capture has {}",
                layout.antennas.len(),
                self.layout.antennas.len()
            )));
        }
        let n = self.len();
        let mut channels = vec![vec![Complex64::new(0.0, 0.0); n]; layout.n_channels()];
        for (dst, src) in layout.antennas.iter().zip(&self.layout.antennas) {
            channels[*dst] = self.channels[*src].clone();
        }
        MultichannelCapture::new(channels, self.sample_rate, self.carrier_freq, layout)
    }

    /// Elementwise sum of two captures with identical shape and layout.
    pub fn add(&self, other: &MultichannelCapture) -> Result<MultichannelCapture> {
        if self.n_channels() != other.n_channels() || self.len() != other.len() {
            return Err(Error::Dimension {
                what: "capture shape",
                expected: self.len(),
                actual: other.len(),
            });
        }
        let mut out = self.clone();
        for (a, b) in out.channels.iter_mut().zip(&other.channels) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_text_roundtrip() {
        for layout in [CaptureLayout::split_lo_default(), CaptureLayout::antennas_only(3)] {
            let text = layout.to_string();
            assert_eq!(text.parse::<CaptureLayout>().unwrap(), layout);
        }
        assert_eq!(
            CaptureLayout::split_lo_default().to_string(),
            "antennas=0,1,2;pairs=AABB;ref=1,3"
        );
    }

    #[test]
    fn layout_validation() {
        let mut l = CaptureLayout::split_lo_default();
        assert!(l.validate(3).is_err());
        l.antennas = vec![0, 0, 2];
        assert!(l.validate(4).is_err());
        let mut l = CaptureLayout::split_lo_default();
        l.reference = Some(ReferenceTaps { pair_a: 2, pair_b: 3 });
        assert!(l.validate(4).is_err());
        assert!("antennas=0,1;pairs=AX;ref=none".parse::<CaptureLayout>().is_err());
    }

    #[test]
    fn capture_rejects_ragged_channels() {
        let z = Complex64::new(0.0, 0.0);
        let err = MultichannelCapture::new(
            vec![vec![z; 4], vec![z; 3]],
            1.0,
            1.0,
            CaptureLayout::antennas_only(2),
        );
        assert!(err.is_err());
    }
}
