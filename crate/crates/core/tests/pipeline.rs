use srs_aoa::campaign::{
    add_re_noise, impair, parse_config_str, random_impairments, read_iq, run_montecarlo, scene_paths, synthesize,
    write_iq, CampaignConfig, SnrPolicy,
};
use srs_aoa::channel::{CaptureLayout, SceneParams, UlaGeometry};
use srs_aoa::receiver::{CalibrationTable, Receiver, ReceiverOptions};
use srs_aoa::subspace::Method;
use srs_aoa::waveform::{ConfigId, SrsWaveform};

fn small_campaign() -> CampaignConfig {
    let mut cfg = CampaignConfig::new(ConfigId::I, vec![15.0, 25.0, 40.0]);
    cfg.n_trials = 24;
    cfg.seed = 11;
    cfg.snr = SnrPolicy::Fixed(10.0);
    cfg
}

#[test]
fn campaign_is_deterministic_and_schedule_free() {
    let cfg = small_campaign();
    let a = run_montecarlo(&cfg).unwrap();
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = single.install(|| run_montecarlo(&cfg).unwrap());
    assert_eq!(a, b);

    let mut other = cfg.clone();
    other.seed = 12;
    assert_ne!(run_montecarlo(&other).unwrap(), a);
}

#[test]
fn rmse_bounds_bias() {
    let r = run_montecarlo(&small_campaign()).unwrap();
    assert_eq!(r.rows.len(), 9);
    for row in &r.rows {
        assert_eq!(row.n_valid, 24);
        assert!(row.rmse_deg * row.rmse_deg + 1e-12 >= row.bias_deg * row.bias_deg, "{row:?}");
        assert!((row.mean_sinr_db - 10.0).abs() < 1.5, "{row:?}");
    }
}

#[test]
fn per_distance_snr_and_subset_of_algorithms() {
    let mut cfg = parse_config_str(
        r#"
        waveform = "III"
        distances = [10, 30]
        snr_db = [30, 5]
        n_trials = 12
        algorithms = ["esprit"]
        seed = 3
        "#,
    )
    .unwrap();
    cfg.scene.with_wall = false;
    let r = run_montecarlo(&cfg).unwrap();
    assert_eq!(r.rows.len(), 2);
    assert!(r.rows.iter().all(|row| row.algorithm == Method::Esprit));
    assert!(r.rows[0].mean_sinr_db > r.rows[1].mean_sinr_db + 15.0);
    assert!(r.rows[0].rmse_deg < r.rows[1].rmse_deg);
}

#[test]
fn recorded_capture_estimates_like_live_one() {
    let wf = ConfigId::I.waveform();
    let geom = UlaGeometry::half_wavelength(3, wf.carrier_freq).unwrap();
    let w = SrsWaveform::default_for(&wf).unwrap();
    let paths = scene_paths(&SceneParams::default(), 30.0, -25.0, &geom).unwrap();
    let slot = wf.slot_len();
    let stream = synthesize(&w, &paths, &geom, 21).unwrap();
    let clean = stream.slice(777..777 + 20 * slot).unwrap();
    let split = add_re_noise(&clean.with_layout(CaptureLayout::split_lo_default()).unwrap(), &wf, 25.0, 9);
    let imp = random_impairments(&wf, 4);
    let capture = impair(&split, &wf, &imp, 1.0, 5).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let stem = dir.path().join("rec");
    write_iq(&capture, &stem).unwrap();
    let back = read_iq(&stem).unwrap();

    let rx = Receiver::new(&wf, w, geom, ReceiverOptions::default()).unwrap();
    let table = CalibrationTable::from_impairments(&imp);
    let snapshot_len = 6 * slot;
    let live = rx.process_capture(&capture, snapshot_len, &table).unwrap();
    let file = rx.process_capture(&back, snapshot_len, &table).unwrap();
    assert_eq!(live.len(), 3);
    assert_eq!(file.len(), live.len());
    for (a, b) in live.iter().zip(&file) {
        for m in Method::ALL {
            let (x, y) = (a.averaged_angles[&m].unwrap(), b.averaged_angles[&m].unwrap());
            assert!((x - y).abs() < 1e-3, "{m}: {x} vs {y}");
            assert!((x - paths[0].azimuth_deg).abs() < 0.5, "{m}: {x}");
        }
    }
}
