use std::f64::consts::PI;

use num_complex::Complex64;

use super::WaveformConfig;
use crate::error::{Error, Result};

/// Shortest pilot sequence the generator accepts.
pub const MIN_SEQUENCE_LEN: usize = 6;

fn is_prime(n: usize) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Largest prime not exceeding `n`.
pub fn largest_prime_at_most(n: usize) -> Option<usize> {
    (2..=n).rev().find(|&p| is_prime(p))
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Zadoff-Chu sequence of the largest prime length `<= length`, cyclically
/// extended to `length` and rotated by `e^{j·cyclic_shift·n}`.
pub fn zadoff_chu_extended(length: usize, root: usize, cyclic_shift: f64) -> Result<Vec<Complex64>> {
    if length < MIN_SEQUENCE_LEN {
        return Err(Error::Config(format!(
            "pilot sequence length {length} below minimum {MIN_SEQUENCE_LEN}"
        )));
    }
    let n_zc = largest_prime_at_most(length).expect("length >= 6 has a prime below it");
    if root == 0 || gcd(root, n_zc) != 1 {
        return Err(Error::Config(format!(
            "root {root} is not coprime with Zadoff-Chu length {n_zc}"
        )));
    }
    if !cyclic_shift.is_finite() {
        return Err(Error::Config("cyclic shift must be finite".into()));
    }
    let q = (root % n_zc) as u128;
    let nz = n_zc as u128;
    Ok((0..length)
        .map(|n| {
            let m = (n % n_zc) as u128;
            // q·m·(m+1) reduced mod 2·N_ZC keeps the phase argument small
            let k = (q * m * (m + 1)) % (2 * nz);
            let phase = -PI * k as f64 / n_zc as f64 + cyclic_shift * n as f64;
            Complex64::from_polar(1.0, phase)
        })
        .collect())
}

/// SRS pilot sequence for one comb: one value per occupied subcarrier.
pub fn generate_srs_sequence(
    cfg: &WaveformConfig,
    root_index: usize,
    cyclic_shift: f64,
) -> Result<Vec<Complex64>> {
    zadoff_chu_extended(cfg.n_pilots(), root_index, cyclic_shift)
}
