use super::{general_eig, least_squares, sample_covariance, AngleEstimate, FrequencySnapshots, Method, SubspaceSplit};
use crate::channel::UlaGeometry;
use crate::error::{Error, Result};

/// Closed-form ESPRIT using the shift between elements `0..M-1` and
/// `1..M`.
pub fn esprit_estimate(y: &FrequencySnapshots, geom: &UlaGeometry, n_sources: usize) -> Result<AngleEstimate> {
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
    let s = &split.signal_basis;
    let s1 = s.rows(0, m - 1).into_owned();
    let s2 = s.rows(1, m - 1).into_owned();
    let p = least_squares(&s1, &s2)?;
    let (lambdas, _) = general_eig(&p)?;
    let angles: Vec<f64> = lambdas
        .iter()
        .filter_map(|l| geom.angle_from_phase(l.arg()))
        .filter(|th| th.abs() < 90.0)
        .collect();
    Ok(AngleEstimate {
        method: Method::Esprit,
        missing: n_sources - angles.len(),
        angles_deg: angles,
    })
}
