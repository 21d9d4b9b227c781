use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use srs_aoa::campaign::{parse_results_csv, read_iq, results_csv, synthesize, write_iq, CampaignResult, CampaignRow};
use srs_aoa::channel::{steering_vector, wrap_phase, CaptureLayout, MultichannelCapture, PropagationPath, UlaGeometry};
use srs_aoa::receiver::{mad_filter, CalibrationTable, MAD_SCALE, MAD_THRESHOLD};
use srs_aoa::stats::median;
use srs_aoa::subspace::{
    esprit_estimate, hermitian_eig, music_estimate, sample_covariance, FrequencySnapshots, Method, SubspaceSplit,
};
use srs_aoa::sync::detect_slot_start;
use srs_aoa::waveform::{ConfigId, Ofdm, ResourceGrid, SrsWaveform};

fn complex() -> impl Strategy<Value = Complex64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| Complex64::new(re, im))
}

fn snapshots(m: usize) -> impl Strategy<Value = FrequencySnapshots> {
    (m..m + 40).prop_flat_map(move |n| {
        prop::collection::vec(complex(), m * n)
            .prop_map(move |v| FrequencySnapshots::new(DMatrix::from_vec(m, n, v)).unwrap())
    })
}

/// One source at `theta` across `n` pilots with random per-pilot gains.
fn single_source(geom: &UlaGeometry, theta: f64, gains: &[Complex64], noise: &[Complex64]) -> FrequencySnapshots {
    let a = steering_vector(geom, theta).unwrap();
    let m = geom.n_elements;
    FrequencySnapshots::new(DMatrix::from_fn(m, gains.len(), |i, j| a[i] * gains[j] + 0.01 * noise[i * gains.len() + j]))
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn covariance_is_hermitian_psd(y in (2usize..6).prop_flat_map(snapshots)) {
        let r = sample_covariance(&y);
        prop_assert_eq!(&r.0, &r.0.adjoint());
        let e = hermitian_eig(&r.0).unwrap();
        let scale = e.eigenvalues[0].max(1e-300);
        prop_assert!(e.eigenvalues.iter().all(|l| *l >= -1e-12 * scale));
        prop_assert!(e.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn signal_and_noise_bases_are_orthogonal(y in (3usize..6).prop_flat_map(snapshots), d in 1usize..3) {
        let split = SubspaceSplit::new(&sample_covariance(&y), d).unwrap();
        let cross = split.signal_basis.adjoint() * &split.noise_basis;
        prop_assert!(cross.norm() < 1e-9, "{}", cross.norm());
        let gram = split.signal_basis.adjoint() * &split.signal_basis;
        prop_assert!((gram - DMatrix::identity(d, d)).norm() < 1e-9);
    }

    #[test]
    fn estimates_are_scale_invariant(
        theta in -70.0f64..70.0,
        gains in prop::collection::vec(complex(), 24),
        noise in prop::collection::vec(complex(), 72),
        mag in 1e-3f64..1e3,
        phase in -3.0f64..3.0,
    ) {
        let geom = UlaGeometry::half_wavelength(3, 2.4e9).unwrap();
        let y = single_source(&geom, theta, &gains, &noise);
        let c = Complex64::from_polar(mag, phase);
        let e1 = esprit_estimate(&y, &geom, 1).unwrap().angles_deg[0];
        let e2 = esprit_estimate(&y.scaled(c), &geom, 1).unwrap().angles_deg[0];
        prop_assert!((e1 - e2).abs() < 1e-8, "{} {}", e1, e2);
        let m1 = music_estimate(&y, &geom, 1, 0.1).unwrap().angles_deg[0];
        let m2 = music_estimate(&y.scaled(c), &geom, 1, 0.1).unwrap().angles_deg[0];
        prop_assert!((m1 - m2).abs() < 1e-6, "{} {}", m1, m2);
    }

    #[test]
    fn noiseless_single_source_is_recovered(theta in -75.0f64..75.0, gains in prop::collection::vec(complex(), 8)) {
        let geom = UlaGeometry::half_wavelength(4, 3.5e9).unwrap();
        let y = single_source(&geom, theta, &gains, &[Complex64::new(0.0, 0.0); 32]);
        let e = esprit_estimate(&y, &geom, 1).unwrap().angles_deg[0];
        prop_assert!((e - theta).abs() < 1e-6, "{} {}", e, theta);
    }

    #[test]
    fn phase_step_inverts(theta in -89.0f64..89.0, spacing in 0.1f64..0.5) {
        let geom = UlaGeometry::new(3, spacing * 299_792_458.0 / 2.4e9, 2.4e9).unwrap();
        let back = geom.angle_from_phase(geom.phase_step(theta)).unwrap();
        prop_assert!((back - theta).abs() < 1e-7);
    }

    #[test]
    fn wrap_phase_lands_in_range(phi in -100.0f64..100.0) {
        let w = wrap_phase(phi);
        prop_assert!((-std::f64::consts::PI..std::f64::consts::PI).contains(&w));
        let turns = (phi - w) / (2.0 * std::f64::consts::PI);
        prop_assert!((turns - turns.round()).abs() < 1e-9);
    }

    #[test]
    fn mad_keeps_at_least_half(values in prop::collection::vec(-100.0f64..100.0, 1..60)) {
        let f = mad_filter(&values);
        prop_assert_eq!(f.mask.len(), values.len());
        prop_assert!(2 * f.kept.len() >= values.len());
        let med = median(&values);
        let mad = MAD_SCALE * median(&values.iter().map(|v| (v - med).abs()).collect::<Vec<_>>());
        for (v, k) in values.iter().zip(&f.mask) {
            let inside = if mad == 0.0 { *v == med } else { (v - med).abs() <= MAD_THRESHOLD * mad };
            prop_assert_eq!(inside, *k);
        }
    }

    #[test]
    fn mad_rejects_far_outlier(
        cluster in prop::collection::vec(-1.0f64..1.0, 5..30),
        outlier in 50.0f64..1000.0,
    ) {
        let mut values = cluster.clone();
        values.push(outlier);
        let f = mad_filter(&values);
        prop_assert!(!f.mask[values.len() - 1]);
    }

    #[test]
    fn calibration_text_roundtrip(phases in prop::collection::vec(-3.14159f64..3.14159, 1..8)) {
        let t = CalibrationTable { intra_pair_phases: phases };
        prop_assert_eq!(CalibrationTable::parse(&t.to_text()).unwrap(), t);
    }

    #[test]
    fn results_csv_roundtrip(rows in prop::collection::vec(
        (1.0f64..100.0, 0usize..3, 0.0f64..10.0, -5.0f64..5.0, -10.0f64..60.0, 0usize..1000), 0..20)
    ) {
        let result = CampaignResult {
            rows: rows
                .into_iter()
                .map(|(d, m, rmse, bias, sinr, n)| CampaignRow {
                    distance_m: d,
                    algorithm: Method::ALL[m],
                    rmse_deg: rmse,
                    bias_deg: bias,
                    mean_sinr_db: sinr,
                    n_valid: n,
                })
                .collect(),
        };
        prop_assert_eq!(parse_results_csv(&results_csv(&result)).unwrap(), result);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn iq_roundtrip_of_f32_data(
        samples in prop::collection::vec((any::<f32>(), any::<f32>()), 1..200),
        split in any::<bool>(),
    ) {
        prop_assume!(samples.iter().all(|(a, b)| a.is_finite() && b.is_finite()));
        let layout = if split { CaptureLayout::split_lo_default() } else { CaptureLayout::antennas_only(3) };
        let ch: Vec<Complex64> = samples.iter().map(|(a, b)| Complex64::new(*a as f64, *b as f64)).collect();
        let channels = (0..layout.n_channels())
            .map(|k| ch.iter().map(|z| z * Complex64::new(if k % 2 == 0 { 1.0 } else { -1.0 }, 0.0)).collect())
            .collect();
        let cap = MultichannelCapture::new(channels, 30.72e6, 2.4e9, layout).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("x");
        write_iq(&cap, &stem).unwrap();
        prop_assert_eq!(read_iq(&stem).unwrap(), cap);
    }

    #[test]
    fn ofdm_roundtrip_random_grid(values in prop::collection::vec(complex(), 14 * 612)) {
        let cfg = ConfigId::I.waveform();
        let ofdm = Ofdm::new(&cfg);
        let grid = ResourceGrid { values: DMatrix::from_vec(14, 612, values) };
        let back = ofdm.demodulate(&ofdm.modulate(&grid).unwrap().samples, 0).unwrap();
        prop_assert!((back.values - grid.values).iter().all(|z| z.norm() < 1e-9));
    }

    #[test]
    fn sync_is_shift_equivariant(offset in 0usize..15 * 1024, theta in -60.0f64..60.0) {
        let cfg = ConfigId::I.waveform();
        let slot = cfg.slot_len();
        let w = SrsWaveform::default_for(&cfg).unwrap();
        let geom = UlaGeometry::half_wavelength(3, cfg.carrier_freq).unwrap();
        let paths = [PropagationPath { azimuth_deg: theta, delay: 0.0, gain: Complex64::new(0.3, -0.2) }];
        let stream = synthesize(&w, &paths, &geom, 3).unwrap();
        let base = detect_slot_start(&cfg, &w.slot, &stream.channels[1][..2 * slot]).unwrap().peak_index;
        let shifted = detect_slot_start(&cfg, &w.slot, &stream.channels[1][offset..offset + 2 * slot]).unwrap().peak_index;
        prop_assert_eq!(base, 0);
        prop_assert_eq!(shifted, (slot - offset % slot) % slot);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn steering_is_unit_modulus_and_conjugate_symmetric(theta in -89.9f64..89.9, m in 2usize..9) {
        let geom = UlaGeometry::half_wavelength(m, 3.5e9).unwrap();
        let a = steering_vector(&geom, theta).unwrap();
        let b = steering_vector(&geom, -theta).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            prop_assert!((x.norm() - 1.0).abs() < 1e-12);
            prop_assert!((x - y.conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn mad_survivors_of_even_cluster_pass_again(
        centre in -50.0f64..50.0,
        spacing in 0.01f64..2.0,
        n in 3usize..25,
        outliers in prop::collection::vec(200.0f64..1e4, 0..3),
    ) {
        let mut values: Vec<f64> = (0..n).map(|i| centre + spacing * i as f64).collect();
        prop_assume!(outliers.len() * 2 < n);
        values.extend(outliers.iter().map(|o| centre + o));
        let first = mad_filter(&values);
        prop_assert_eq!(first.kept.len(), n);
        let second = mad_filter(&first.kept);
        prop_assert!(second.mask.iter().all(|k| *k));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn propagation_is_linear_in_paths(
        a in (-80.0f64..80.0, 0.0f64..2e-7, complex()),
        b in (-80.0f64..80.0, 0.0f64..2e-7, complex()),
    ) {
        let cfg = ConfigId::I.waveform();
        let w = SrsWaveform::default_for(&cfg).unwrap();
        let geom = UlaGeometry::half_wavelength(3, cfg.carrier_freq).unwrap();
        let p = |(t, d, g): (f64, f64, Complex64)| PropagationPath { azimuth_deg: t, delay: d, gain: g };
        let (pa, pb) = (p(a), p(b));
        let both = srs_aoa::channel::propagate(&w.slot, &[pa, pb], &geom).unwrap();
        let sum = srs_aoa::channel::propagate(&w.slot, &[pa], &geom)
            .unwrap()
            .add(&srs_aoa::channel::propagate(&w.slot, &[pb], &geom).unwrap())
            .unwrap();
        let scale = both.channels.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
        for (x, y) in both.channels.iter().flatten().zip(sum.channels.iter().flatten()) {
            prop_assert!((x - y).norm() <= 1e-9 * scale);
        }
    }

    #[test]
    fn sync_shifts_with_prepended_zeros_and_ignores_scale(k in 0usize..15 * 1024, mag in 1e-3f64..1e3, ph in -3.0f64..3.0) {
        let cfg = ConfigId::I.waveform();
        let w = SrsWaveform::default_for(&cfg).unwrap();
        let slot = cfg.slot_len();
        let clean = w.slot.repeat(2).samples;
        let base = detect_slot_start(&cfg, &w.slot, &clean).unwrap().peak_index;
        let mut shifted = vec![Complex64::new(0.0, 0.0); k];
        shifted.extend_from_slice(&clean[..2 * slot - k]);
        let found = detect_slot_start(&cfg, &w.slot, &shifted).unwrap().peak_index;
        prop_assert_eq!(found, base + k);
        let c = Complex64::from_polar(mag, ph);
        let scaled: Vec<Complex64> = shifted.iter().map(|z| z * c).collect();
        prop_assert_eq!(detect_slot_start(&cfg, &w.slot, &scaled).unwrap().peak_index, found);
    }
}
