use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::SPEED_OF_LIGHT;

/// Uniform linear array: `n_elements` isotropic elements `element_spacing`
/// metres apart, receiving around `carrier_freq`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UlaGeometry {
    pub n_elements: usize,
    pub element_spacing: f64,
    pub carrier_freq: f64,
}

impl UlaGeometry {
    pub fn new(n_elements: usize, element_spacing: f64, carrier_freq: f64) -> Result<Self> {
        let geom = UlaGeometry {
            n_elements,
            element_spacing,
            carrier_freq,
        };
        geom.validate()?;
        Ok(geom)
    }

    /// Half-wavelength spacing at the carrier.
    pub fn half_wavelength(n_elements: usize, carrier_freq: f64) -> Result<Self> {
        Self::new(n_elements, SPEED_OF_LIGHT / carrier_freq / 2.0, carrier_freq)
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_elements < 2 {
            return Err(Error::Config(format!(
                "array needs at least 2 elements, got {}",
                self.n_elements
            )));
        }
        if !(self.carrier_freq.is_finite() && self.carrier_freq > 0.0) {
            return Err(Error::Config(format!("invalid carrier {}", self.carrier_freq)));
        }
        let half = self.wavelength() / 2.0;
        if !(self.element_spacing > 0.0 && self.element_spacing <= half * (1.0 + 1e-12)) {
            return Err(Error::Config(format!(
                "element spacing {} m outside (0, lambda/2 = {half} m]",
                self.element_spacing
            )));
        }
        Ok(())
    }

    /// Inter-element phase step for a plane wave from `theta_deg`:
    /// `-2π d sinθ / λ`.
    pub fn phase_step(&self, theta_deg: f64) -> f64 {
        -2.0 * PI * self.element_spacing * theta_deg.to_radians().sin() / self.wavelength()
    }

    /// Inverse of [`phase_step`](Self::phase_step); `None` outside the
    /// visible region.
    pub fn angle_from_phase(&self, phase: f64) -> Option<f64> {
        let kappa = -phase * self.wavelength() / (2.0 * PI * self.element_spacing);
        (kappa.abs() <= 1.0).then(|| kappa.asin().to_degrees())
    }
}

/// Array response `a_m = exp(-j 2π f_c m d sinθ / c)`.
pub fn steering_vector(geom: &UlaGeometry, theta_deg: f64) -> Result<DVector<Complex64>> {
    if !(theta_deg.abs() < 90.0) {
        return Err(Error::AngleDomain(theta_deg));
    }
    Ok(steering_unchecked(geom, theta_deg))
}

pub(crate) fn steering_unchecked(geom: &UlaGeometry, theta_deg: f64) -> DVector<Complex64> {
    let step = geom.phase_step(theta_deg);
    DVector::from_fn(geom.n_elements, |m, _| {
        Complex64::from_polar(1.0, step * m as f64)
    })
}

/// Steering vector evaluated from a phase step directly.
pub(crate) fn vandermonde(n: usize, z: Complex64) -> DVector<Complex64> {
    let mut v = DVector::from_element(n, Complex64::new(1.0, 0.0));
    for m in 1..n {
        v[m] = v[m - 1] * z;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half_wave() -> UlaGeometry {
        UlaGeometry::half_wavelength(3, 2.4e9).unwrap()
    }

    #[test]
    fn broadside_is_all_ones() {
        let a = steering_vector(&half_wave(), 0.0).unwrap();
        for z in a.iter() {
            assert!((z - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn thirty_degrees_half_wavelength() {
        let a = steering_vector(&half_wave(), 30.0).unwrap();
        let want = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, -1.0),
            Complex64::new(-1.0, 0.0),
        ];
        for (z, w) in a.iter().zip(want) {
            assert!((z - w).norm() < 1e-12, "{z} vs {w}");
        }
        let b = steering_vector(&half_wave(), -30.0).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x.conj() - y).norm() < 1e-15);
        }
    }

    #[test]
    fn domain_and_geometry_errors() {
        assert!(matches!(
            steering_vector(&half_wave(), 90.0),
            Err(Error::AngleDomain(_))
        ));
        assert!(steering_vector(&half_wave(), f64::NAN).is_err());
        assert!(UlaGeometry::new(1, 0.01, 2.4e9).is_err());
        assert!(UlaGeometry::new(3, 0.1, 2.4e9).is_err());
        assert!(UlaGeometry::new(3, 0.0, 2.4e9).is_err());
    }

    #[test]
    fn phase_roundtrip() {
        let g = half_wave();
        for theta in [-70.0, -12.5, 0.0, 33.0, 80.0] {
            let back = g.angle_from_phase(g.phase_step(theta)).unwrap();
            assert!((back - theta).abs() < 1e-9);
        }
        assert!(g.angle_from_phase(3.2).is_none());
    }
}
