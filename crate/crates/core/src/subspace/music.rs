use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{sample_covariance, AngleEstimate, FrequencySnapshots, Method, SubspaceSplit};
use crate::channel::{steering_vector, UlaGeometry};
use crate::error::{Error, Result};

pub const DEFAULT_GRID_STEP: f64 = 0.1;

/// Symmetric grid `i·step` strictly inside (−90°, 90°).
pub fn music_angle_grid(step_deg: f64) -> Result<Vec<f64>> {
    if !(step_deg > 0.0 && step_deg < 90.0) {
        return Err(Error::Config(format!("grid step {step_deg} outside (0, 90)")));
    }
    let n = ((90.0 / step_deg).ceil() as i64) - 1;
    let n = if (n + 1) as f64 * step_deg < 90.0 { n + 1 } else { n };
    Ok((-n..=n).map(|i| i as f64 * step_deg).collect())
}

fn projection_norms(noise: &DMatrix<Complex64>, geom: &UlaGeometry, grid: &[f64]) -> Result<Vec<f64>> {
    let nh = noise.adjoint();
    grid.iter()
        .map(|&th| {
            let a = steering_vector(geom, th)?;
            Ok((&nh * a).norm_squared())
        })
        .collect()
}

/// Pseudo-spectrum `1 / (aᴴ U_n U_nᴴ a)` over `angle_grid`.
pub fn music_spectrum(split: &SubspaceSplit, geom: &UlaGeometry, angle_grid: &[f64]) -> Result<Vec<f64>> {
    check_inputs(split, geom, angle_grid)?;
    Ok(projection_norms(&split.noise_basis, geom, angle_grid)?
        .into_iter()
        .map(|d| 1.0 / d.max(f64::MIN_POSITIVE))
        .collect())
}

fn check_inputs(split: &SubspaceSplit, geom: &UlaGeometry, angle_grid: &[f64]) -> Result<()> {
    if split.noise_basis.ncols() == 0 {
        return Err(Error::SourceCount {
            requested: split.signal_basis.ncols(),
            elements: geom.n_elements,
        });
    }
    if split.noise_basis.nrows() != geom.n_elements {
        return Err(Error::Dimension {
            what: "noise basis rows",
            expected: geom.n_elements,
            actual: split.noise_basis.nrows(),
        });
    }
    if angle_grid.is_empty() {
        return Err(Error::Config("empty angle grid".into()));
    }
    Ok(())
}

/// MUSIC angles for `n_sources` sources, strongest peak first.
pub fn music_estimate(
    y: &FrequencySnapshots,
    geom: &UlaGeometry,
    n_sources: usize,
    grid_step: f64,
) -> Result<AngleEstimate> {
    let m = geom.n_elements;
    if n_sources == 0 || n_sources >= m {
        return Err(Error::SourceCount {
            requested: n_sources,
            elements: m,
        });
    }
    if y.n_antennas() != m {
        return Err(Error::Dimension {
            what: "snapshot rows",
            expected: m,
            actual: y.n_antennas(),
        });
    }
    let split = SubspaceSplit::new(&sample_covariance(y), n_sources)?;
    let grid = music_angle_grid(grid_step)?;
    check_inputs(&split, geom, &grid)?;
    let denom = projection_norms(&split.noise_basis, geom, &grid)?;

    let mut peaks: Vec<(f64, f64)> = Vec::new();
    for i in 1..grid.len() - 1 {
        let (l, c, r) = (denom[i - 1], denom[i], denom[i + 1]);
        if c < l && c <= r {
            let curvature = l - 2.0 * c + r;
            let offset = if curvature > 0.0 {
                (0.5 * (l - r) / curvature).clamp(-0.5, 0.5)
            } else {
                0.0
            };
            let angle = (grid[i] + offset * grid_step).clamp(-90.0 + 1e-9, 90.0 - 1e-9);
            peaks.push((angle, 1.0 / c.max(f64::MIN_POSITIVE)));
        }
    }
    peaks.sort_by(|a, b| b.1.total_cmp(&a.1));
    peaks.truncate(n_sources);
    Ok(AngleEstimate {
        method: Method::Music,
        missing: n_sources - peaks.len(),
        angles_deg: peaks.into_iter().map(|p| p.0).collect(),
    })
}
