use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{general_eig, hermitian_eig, least_squares, AngleDelay, AngleDelayEstimate, ChannelEstimate};
use crate::channel::{vandermonde, UlaGeometry};
use crate::error::{Error, Result};
use crate::waveform::WaveformConfig;

/// Frequency stacking factor.
pub const DEFAULT_STACKING: usize = 8;
/// Weight of the antenna operator in the combination that is diagonalised.
pub const DEFAULT_MIXING: f64 = 0.3;
pub const RETRY_MIXING: f64 = 0.7;
const DEGENERACY: f64 = 1e-8;
const RANK_TOLERANCE: f64 = 1e-10;

/// Block-Hankel matrix with row `a·m + f` and column `j` holding `H[a, j+f]`.
fn hankel(h: &DMatrix<Complex64>, m: usize) -> DMatrix<Complex64> {
    let (n_ant, n) = h.shape();
    let cols = n - m + 1;
    DMatrix::from_fn(n_ant * m, cols, |row, j| h[(row / m, j + row % m)])
}

fn select_rows(s: &DMatrix<Complex64>, rows: &[usize]) -> DMatrix<Complex64> {
    DMatrix::from_fn(rows.len(), s.ncols(), |i, j| s[(rows[i], j)])
}

fn min_separation(values: &[Complex64]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            best = best.min((values[i] - values[j]).norm());
        }
    }
    best
}

/// Eigenvalues, descending, of the frequency-smoothed covariance the joint
/// estimator works on; used to pick its source count.
pub fn hankel_eigenvalues(h: &ChannelEstimate, stacking: usize) -> Result<Vec<f64>> {
    let n = h.0.ncols();
    if stacking < 2 || stacking > n {
        return Err(Error::Config(format!("stacking factor {stacking} outside [2, {n}]")));
    }
    let x = hankel(&h.0, stacking);
    let r = &x * x.adjoint() / Complex64::new(x.ncols() as f64, 0.0);
    Ok(hermitian_eig(&r)?.eigenvalues)
}

/// Joint angle and delay estimation from a per-pilot channel.
///
/// Delays are in pilot-grid samples, i.e. periods of the pilot DFT of
/// length `cfg.n_pilots()`.
pub fn jade_esprit_estimate(
    h: &ChannelEstimate,
    geom: &UlaGeometry,
    cfg: &WaveformConfig,
    n_sources: usize,
    stacking: usize,
) -> Result<AngleDelayEstimate> {
    let h = &h.0;
    let (n_ant, n) = h.shape();
    let l = cfg.n_pilots();
    if n_ant != geom.n_elements {
        return Err(Error::Dimension {
            what: "channel rows",
            expected: geom.n_elements,
            actual: n_ant,
        });
    }
    if n != l {
        return Err(Error::Dimension {
            what: "channel columns",
            expected: l,
            actual: n,
        });
    }
    if stacking < 2 || stacking > n {
        return Err(Error::Config(format!("stacking factor {stacking} outside [2, {n}]")));
    }
    // both shift equations need at least D rows
    let rows_antenna = (n_ant - 1) * stacking;
    let rows_freq = n_ant * (stacking - 1);
    if n_sources == 0 || n_sources > rows_antenna.min(rows_freq) || n_sources > n - stacking + 1 {
        return Err(Error::SourceCount {
            requested: n_sources,
            elements: n_ant * stacking,
        });
    }

    let x = hankel(h, stacking);
    let r = &x * x.adjoint() / Complex64::new(x.ncols() as f64, 0.0);
    let eig = hermitian_eig(&r)?;
    let largest = eig.eigenvalues[0];
    let rank = eig.eigenvalues.iter().filter(|&&v| v > RANK_TOLERANCE * largest).count();
    if largest <= 0.0 || rank < n_sources {
        return Err(Error::RankDeficient {
            rank,
            required: n_sources,
        });
    }
    let es = eig.eigenvectors.columns(0, n_sources).into_owned();

    let ant1: Vec<usize> = (0..rows_antenna).collect();
    let ant2: Vec<usize> = (stacking..n_ant * stacking).collect();
    let freq1: Vec<usize> = (0..n_ant).flat_map(|a| (0..stacking - 1).map(move |f| a * stacking + f)).collect();
    let freq2: Vec<usize> = freq1.iter().map(|r| r + 1).collect();
    let phi_theta = least_squares(&select_rows(&es, &ant1), &select_rows(&es, &ant2))?;
    let phi_tau = least_squares(&select_rows(&es, &freq1), &select_rows(&es, &freq2))?;

    let mut basis = None;
    for rho in [DEFAULT_MIXING, RETRY_MIXING] {
        let combined = &phi_tau + &phi_theta * Complex64::new(rho, 0.0);
        let (values, vectors) = general_eig(&combined)?;
        if min_separation(&values) > DEGENERACY * combined.norm().max(1.0) {
            basis = Some(vectors);
            break;
        }
        basis.get_or_insert(vectors);
    }
    let v = basis.expect("at least one mixing attempt");
    let v_inv = v.clone().try_inverse().ok_or(Error::RankDeficient {
        rank: n_sources - 1,
        required: n_sources,
    })?;
    let xi = (&v_inv * &phi_theta * &v).diagonal();
    let psi = (&v_inv * &phi_tau * &v).diagonal();

    let period = l as f64;
    let mut pairs = Vec::with_capacity(n_sources);
    for (x, p) in xi.iter().zip(psi.iter()) {
        let Some(theta) = geom.angle_from_phase(x.arg()).filter(|t| t.abs() < 90.0) else {
            continue;
        };
        let mut delay = (-p.arg() * period / (2.0 * PI)).rem_euclid(period);
        if delay >= period {
            delay = 0.0;
        }
        pairs.push(AngleDelay {
            azimuth_deg: theta,
            delay,
        });
    }
    Ok(AngleDelayEstimate {
        missing: n_sources - pairs.len(),
        pairs,
        delay_period: l,
    })
}

/// Least-squares complex gains of the estimated paths on `H`.
pub fn jade_path_gains(h: &ChannelEstimate, geom: &UlaGeometry, est: &AngleDelayEstimate) -> Result<Vec<Complex64>> {
    let h = &h.0;
    let (n_ant, n) = h.shape();
    if est.pairs.is_empty() {
        return Ok(Vec::new());
    }
    let mut a = DMatrix::zeros(n_ant * n, est.pairs.len());
    for (i, p) in est.pairs.iter().enumerate() {
        let steer = vandermonde(n_ant, Complex64::from_polar(1.0, geom.phase_step(p.azimuth_deg)));
        let freq = vandermonde(
            n,
            Complex64::from_polar(1.0, -2.0 * PI * p.delay / est.delay_period as f64),
        );
        for k in 0..n {
            for m in 0..n_ant {
                a[(k * n_ant + m, i)] = steer[m] * freq[k];
            }
        }
    }
    let b = DMatrix::from_fn(n_ant * n, 1, |r, _| h[(r % n_ant, r / n_ant)]);
    let g = least_squares(&a, &b)?;
    Ok(g.column(0).iter().copied().collect())
}

impl AngleDelayEstimate {
    /// Azimuth of the path with the largest fitted gain.
    pub fn strongest_azimuth(&self, h: &ChannelEstimate, geom: &UlaGeometry) -> Option<f64> {
        if self.pairs.len() == 1 {
            return Some(self.pairs[0].azimuth_deg);
        }
        let gains = jade_path_gains(h, geom, self).ok()?;
        gains
            .iter()
            .zip(&self.pairs)
            .max_by(|a, b| a.0.norm().total_cmp(&b.0.norm()))
            .map(|(_, p)| p.azimuth_deg)
    }
}
