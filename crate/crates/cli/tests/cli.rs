use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_srs-aoa"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

const SMALL_CAMPAIGN: &str = r#"
waveform = "I"
distances = [15, 30]
snr_db = 20
n_trials = 6
seed = 4

[output]
csv = "r.csv"
plot_script = "r.py"
"#;

#[test]
fn generate_writes_one_channel_per_slot_count() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["--out", "g", "generate", "--waveform", "III", "--slots", "2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let meta = fs::read_to_string(dir.path().join("g/srs.meta")).unwrap();
    assert!(meta.contains("n_channels = 1\n"));
    assert!(meta.contains("n_samples = 30720\n"));
    assert!(meta.contains("waveform = III\n"));
    assert_eq!(fs::metadata(dir.path().join("g/srs.ch0.iq")).unwrap().len(), 30720 * 8);
}

#[test]
fn simulate_then_estimate_recovers_angle() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["--out", "s", "--seed", "2", "simulate", "--distance", "25", "--angle", "-18"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("s/capture.cal").exists());
    assert!(dir.path().join("s/capture.ch3.iq").exists());

    let o = run(dir.path(), &["--out", "e", "--algorithms", "esprit,jade", "estimate", "--input", "s/capture"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("e/snapshots.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("snapshot,start_sample,algorithm,angle_deg,n_slots,n_kept,sinr_db"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 6);
    for r in &rows {
        assert!(r[2] == "ESPRIT" || r[2] == "JADE");
        let angle: f64 = r[3].parse().unwrap();
        assert!((angle + 18.0).abs() < 0.5, "{r:?}");
    }
}

#[test]
fn estimate_with_zero_calibration_is_off() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(dir.path(), &["--out", "s", "--seed", "8", "simulate", "--angle", "10"])), 0);
    fs::write(dir.path().join("zero.cal"), "0\n0\n0\n0\n").unwrap();
    let o = run(
        dir.path(),
        &["--out", "e", "--algorithms", "esprit", "estimate", "--input", "s/capture", "--calibration", "zero.cal"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("e/snapshots.csv")).unwrap();
    let worst = csv
        .lines()
        .skip(1)
        .filter_map(|l| l.split(',').nth(3).and_then(|a| a.parse::<f64>().ok()))
        .map(|a| (a - 10.0).abs())
        .fold(0.0, f64::max);
    assert!(worst > 1.0, "{csv}");
}

#[test]
fn campaign_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), SMALL_CAMPAIGN).unwrap();
    for out in ["a", "b"] {
        let o = run(dir.path(), &["--config", "c.toml", "--out", out, "campaign"]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = fs::read(dir.path().join("a/r.csv")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b/r.csv")).unwrap());
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 7);
    assert!(fs::read_to_string(dir.path().join("a/r.py")).unwrap().contains("matplotlib"));
    let meta = fs::read_to_string(dir.path().join("a/r.meta")).unwrap();
    assert!(meta.contains("seed = 4\n"));

    let o = run(dir.path(), &["--config", "c.toml", "--out", "c", "--seed", "5", "campaign"]);
    assert_eq!(code(&o), 0);
    assert_ne!(fs::read(dir.path().join("c/r.csv")).unwrap(), fs::read(dir.path().join("a/r.csv")).unwrap());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(dir.path(), &["--help"])), 0);
    assert_eq!(code(&run(dir.path(), &["frobnicate"])), 1);
    assert_eq!(code(&run(dir.path(), &["--algorithms", "capon", "campaign"])), 1);

    fs::write(dir.path().join("bad.toml"), "waveform = \"I\"\ndistances = [-5]\n").unwrap();
    let o = run(dir.path(), &["--config", "bad.toml", "campaign"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("distances"));

    fs::write(dir.path().join("unknown.toml"), "waveform = \"I\"\ndistances = [5]\ncolour = 1\n").unwrap();
    assert_eq!(code(&run(dir.path(), &["--config", "unknown.toml", "campaign"])), 1);
    assert_eq!(code(&run(dir.path(), &["--config", "absent.toml", "campaign"])), 1);

    assert_eq!(code(&run(dir.path(), &["estimate", "--input", "missing"])), 2);
    assert_eq!(code(&run(dir.path(), &["--out", "g", "generate"])), 0);
    assert_eq!(code(&run(dir.path(), &["estimate", "--input", "g/srs"])), 2);
}
