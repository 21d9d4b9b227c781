//! Covariance, eigen-subspaces and the three angle estimators.

mod eig;
mod esprit;
mod jade;
mod music;

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;

pub use eig::{general_eig, hermitian_eig, least_squares, HermitianEigen, HERMITIAN_TOLERANCE, JACOBI_TOLERANCE};
pub use esprit::esprit_estimate;
pub use jade::{hankel_eigenvalues, jade_esprit_estimate, jade_path_gains, DEFAULT_MIXING, DEFAULT_STACKING, RETRY_MIXING};
pub use music::{music_angle_grid, music_estimate, music_spectrum, DEFAULT_GRID_STEP};

use crate::channel::{steering_vector, UlaGeometry};
use crate::error::{Error, Result};

/// Default ratio to the smallest eigenvalue above which an eigenvalue
/// counts as a source.
pub const DEFAULT_THRESHOLD_FACTOR: f64 = 10.0;

/// `M × N` frequency-domain observations: one column per occupied
/// subcarrier and SRS symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencySnapshots(pub DMatrix<Complex64>);

impl FrequencySnapshots {
    pub fn new(y: DMatrix<Complex64>) -> Result<Self> {
        if y.nrows() < 2 {
            return Err(Error::Dimension {
                what: "snapshot rows",
                expected: 2,
                actual: y.nrows(),
            });
        }
        if y.ncols() < y.nrows() {
            return Err(Error::Dimension {
                what: "snapshot columns",
                expected: y.nrows(),
                actual: y.ncols(),
            });
        }
        Ok(FrequencySnapshots(y))
    }

    pub fn n_antennas(&self) -> usize {
        self.0.nrows()
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        FrequencySnapshots(&self.0 * c)
    }
}

/// Hermitian sample covariance `(1/N) Y Yᴴ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix(pub DMatrix<Complex64>);

pub fn sample_covariance(y: &FrequencySnapshots) -> CovarianceMatrix {
    let n = y.0.ncols() as f64;
    let mut r = &y.0 * y.0.adjoint() / Complex64::new(n, 0.0);
    // exact Hermitian symmetry regardless of summation order
    for i in 0..r.nrows() {
        r[(i, i)] = Complex64::new(r[(i, i)].re, 0.0);
        for j in i + 1..r.ncols() {
            r[(j, i)] = r[(i, j)].conj();
        }
    }
    CovarianceMatrix(r)
}

/// Signal and noise eigen-bases of a covariance for `D` sources.
#[derive(Debug, Clone)]
pub struct SubspaceSplit {
    pub signal_basis: DMatrix<Complex64>,
    pub noise_basis: DMatrix<Complex64>,
    pub eigenvalues: Vec<f64>,
}

impl SubspaceSplit {
    pub fn new(r: &CovarianceMatrix, n_sources: usize) -> Result<Self> {
        let m = r.0.nrows();
        if n_sources == 0 || n_sources > m {
            return Err(Error::SourceCount {
                requested: n_sources,
                elements: m,
            });
        }
        let eig = hermitian_eig(&r.0)?;
        Ok(SubspaceSplit {
            signal_basis: eig.eigenvectors.columns(0, n_sources).into_owned(),
            noise_basis: eig.eigenvectors.columns(n_sources, m - n_sources).into_owned(),
            eigenvalues: eig.eigenvalues,
        })
    }
}

/// Number of eigenvalues exceeding `threshold_factor` times the smallest,
/// clamped to `[1, max_sources]`. The smallest eigenvalue is floored at
/// `1e-12` of the largest so roundoff in noiseless data is not counted.
pub fn estimate_num_sources_with(eigenvalues: &[f64], max_sources: usize, threshold_factor: f64) -> usize {
    let largest = eigenvalues.iter().copied().fold(0.0, f64::max);
    let smallest = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let floor = smallest.max(1e-12 * largest);
    let count = eigenvalues.iter().filter(|&&l| l > threshold_factor * floor).count();
    count.clamp(1, max_sources.max(1))
}

pub fn estimate_num_sources(eigenvalues: &[f64], max_sources: usize) -> usize {
    estimate_num_sources_with(eigenvalues, max_sources, DEFAULT_THRESHOLD_FACTOR)
}

/// Per-antenna, per-pilot channel obtained by dividing received pilots by
/// the transmitted ones.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate(pub DMatrix<Complex64>);

impl ChannelEstimate {
    /// Averages `received / pilot` over the SRS symbols of each antenna.
    /// `per_antenna[m]` is `srs_symbols × n_pilots`.
    pub fn from_pilots(per_antenna: &[DMatrix<Complex64>], pilots: &[Complex64]) -> Result<Self> {
        let n = pilots.len();
        if let Some(bad) = per_antenna.iter().find(|g| g.ncols() != n) {
            return Err(Error::Dimension {
                what: "pilot columns",
                expected: n,
                actual: bad.ncols(),
            });
        }
        let h = DMatrix::from_fn(per_antenna.len(), n, |m, k| {
            let g = &per_antenna[m];
            let sum: Complex64 = (0..g.nrows()).map(|l| g[(l, k)]).sum();
            sum / (pilots[k] * g.nrows() as f64)
        });
        if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Config("non-finite channel estimate".into()));
        }
        Ok(ChannelEstimate(h))
    }
}

/// Estimator identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Music,
    Esprit,
    Jade,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Music, Method::Esprit, Method::Jade];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Music => "MUSIC",
            Method::Esprit => "ESPRIT",
            Method::Jade => "JADE",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "music" => Ok(Method::Music),
            "esprit" => Ok(Method::Esprit),
            "jade" | "jade-esprit" | "2d-esprit" => Ok(Method::Jade),
            other => Err(Error::Config(format!("unknown algorithm {other:?}"))),
        }
    }
}

/// Angles from MUSIC or ESPRIT. `missing` counts requested sources that
/// produced no valid angle (too few spectral peaks, or outside the
/// visible region).
#[derive(Debug, Clone, PartialEq)]
pub struct AngleEstimate {
    pub method: Method,
    pub angles_deg: Vec<f64>,
    pub missing: usize,
}

/// One paired path from the joint estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleDelay {
    pub azimuth_deg: f64,
    /// Pilot-grid samples in `[0, L)`.
    pub delay: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AngleDelayEstimate {
    pub pairs: Vec<AngleDelay>,
    /// Pilot DFT length the delays refer to.
    pub delay_period: usize,
    pub missing: usize,
}

impl AngleDelayEstimate {
    /// Delay of pair `i` in seconds, given the pilot spacing in Hz.
    pub fn delay_seconds(&self, i: usize, pilot_spacing_hz: f64) -> f64 {
        self.pairs[i].delay / (pilot_spacing_hz * self.delay_period as f64)
    }
}

/// Least-squares amplitudes of `Y` on the steering vectors of `angles`;
/// returns mean power per source.
pub fn source_powers(y: &FrequencySnapshots, geom: &UlaGeometry, angles: &[f64]) -> Result<Vec<f64>> {
    if angles.is_empty() {
        return Ok(Vec::new());
    }
    let m = y.n_antennas();
    let mut a = DMatrix::zeros(m, angles.len());
    for (i, th) in angles.iter().enumerate() {
        a.set_column(i, &steering_vector(geom, *th)?);
    }
    let s = least_squares(&a, &y.0)?;
    let n = y.0.ncols() as f64;
    Ok((0..angles.len())
        .map(|i| s.row(i).iter().map(|z| z.norm_sqr()).sum::<f64>() / n)
        .collect())
}

/// Angle of the strongest source among `angles` by least-squares power.
pub fn strongest_angle(y: &FrequencySnapshots, geom: &UlaGeometry, angles: &[f64]) -> Option<f64> {
    if angles.len() == 1 {
        return Some(angles[0]);
    }
    let powers = source_powers(y, geom, angles).ok()?;
    powers
        .iter()
        .zip(angles)
        .max_by(|a, b| a.0.total_cmp(b.0))
        .map(|(_, th)| *th)
}
