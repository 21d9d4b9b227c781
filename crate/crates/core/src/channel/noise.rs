use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::MultichannelCapture;

/// Samples whose power falls below this fraction of the record's mean power
/// are treated as unoccupied when measuring signal power.
const OCCUPANCY_FLOOR: f64 = 1e-3;

/// Mean power over the occupied samples of the antenna channels.
pub fn occupied_signal_power(capture: &MultichannelCapture) -> f64 {
    let ants = &capture.layout.antennas;
    let total: f64 = ants
        .iter()
        .flat_map(|&a| capture.channels[a].iter())
        .map(|z| z.norm_sqr())
        .sum();
    let count = ants.len() * capture.len();
    if count == 0 || total == 0.0 {
        return 0.0;
    }
    let floor = OCCUPANCY_FLOOR * total / count as f64;
    let (sum, n) = ants
        .iter()
        .flat_map(|&a| capture.channels[a].iter())
        .map(|z| z.norm_sqr())
        .filter(|p| *p > floor)
        .fold((0.0, 0usize), |(s, n), p| (s + p, n + 1));
    sum / n as f64
}

/// Adds circular complex Gaussian noise of the given per-sample variance to
/// every channel. Channels are filled in order from one seeded stream.
pub fn add_noise_variance(capture: &MultichannelCapture, variance: f64, seed: u64) -> MultichannelCapture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma = (variance / 2.0).sqrt();
    let mut out = capture.clone();
    for ch in &mut out.channels {
        for z in ch.iter_mut() {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            *z += Complex64::new(re, im) * sigma;
        }
    }
    out
}

/// AWGN at `snr_db` relative to the mean power of the occupied antenna
/// samples. A silent capture is treated as unit signal power.
pub fn add_awgn(capture: &MultichannelCapture, snr_db: f64, seed: u64) -> MultichannelCapture {
    let power = match occupied_signal_power(capture) {
        p if p > 0.0 => p,
        _ => 1.0,
    };
    add_noise_variance(capture, power / 10f64.powf(snr_db / 10.0), seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::CaptureLayout;

    fn unit_power(n: usize) -> MultichannelCapture {
        let ch: Vec<Complex64> = (0..n)
            .map(|i| Complex64::from_polar(1.0, 0.37 * i as f64))
            .collect();
        MultichannelCapture::new(vec![ch.clone(), ch], 1.0, 1.0, CaptureLayout::antennas_only(2)).unwrap()
    }

    #[test]
    fn huge_snr_is_transparent() {
        let cap = unit_power(1000);
        let noisy = add_awgn(&cap, 300.0, 3);
        for (a, b) in cap.channels.iter().zip(&noisy.channels) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).norm() <= 1e-9 * x.norm());
            }
        }
    }

    #[test]
    fn zero_db_noise_power() {
        let cap = unit_power(100_000);
        let noisy = add_awgn(&cap, 0.0, 11);
        let n = cap.len() as f64;
        for (a, b) in cap.channels.iter().zip(&noisy.channels) {
            let p: f64 = a.iter().zip(b).map(|(x, y)| (y - x).norm_sqr()).sum::<f64>() / n;
            assert!((p - 1.0).abs() < 0.05, "noise power {p}");
        }
    }

    #[test]
    fn seeded_noise_is_reproducible() {
        let cap = unit_power(256);
        assert_eq!(add_awgn(&cap, 5.0, 42), add_awgn(&cap, 5.0, 42));
        assert_ne!(add_awgn(&cap, 5.0, 42), add_awgn(&cap, 5.0, 43));
    }

    #[test]
    fn occupied_power_ignores_silence() {
        let mut cap = unit_power(1000);
        for ch in &mut cap.channels {
            ch.extend(std::iter::repeat_n(Complex64::new(0.0, 0.0), 3000));
        }
        assert!((occupied_signal_power(&cap) - 1.0).abs() < 1e-12);
    }
}
