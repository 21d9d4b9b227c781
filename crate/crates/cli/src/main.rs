use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};

use srs_aoa::campaign::{
    calibration_path, campaign_metadata, emit_results, parse_config, read_iq_with_metadata, run_montecarlo,
    simulate_capture, write_iq_with, CampaignConfig, SnrPolicy,
};
use srs_aoa::channel::{CaptureLayout, MultichannelCapture, UlaGeometry};
use srs_aoa::receiver::{CalibrationTable, Receiver, ReceiverOptions, SnapshotResult, SourcePolicy};
use srs_aoa::subspace::Method;
use srs_aoa::waveform::{ConfigId, SrsWaveform};

const SNAPSHOT_HEADER: &str = "snapshot,start_sample,algorithm,angle_deg,n_slots,n_kept,sinr_db";

#[derive(Parser)]
#[command(name = "srs-aoa", version, about = "SRS angle-of-arrival lab: waveforms, simulated captures, estimation and campaigns")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed, overriding the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Comma-separated subset of music, esprit, jade.
    #[arg(long, global = true, value_delimiter = ',')]
    algorithms: Option<Vec<Method>>,
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the clean single-channel SRS waveform as IQ files.
    Generate {
        /// Waveform configuration id, overriding the configuration.
        #[arg(long)]
        waveform: Option<ConfigId>,
        #[arg(long, default_value_t = 1)]
        slots: usize,
    },
    /// Simulate a multichannel capture of the configured scene.
    Simulate {
        /// Transmitter distance in metres, overriding the first configured distance.
        #[arg(long)]
        distance: Option<f64>,
        /// Transmitter angle in degrees.
        #[arg(long, allow_hyphen_values = true)]
        angle: Option<f64>,
        /// Per-resource-element SNR in dB.
        #[arg(long, allow_hyphen_values = true)]
        snr: Option<f64>,
        /// Record without LO impairments, reference tone or calibration.
        #[arg(long)]
        no_impairments: bool,
    },
    /// Estimate angles from recorded IQ files, one row per snapshot and algorithm.
    Estimate {
        /// Recording stem: `<stem>.meta` and `<stem>.ch<k>.iq`.
        #[arg(long)]
        input: PathBuf,
        /// Calibration table; defaults to `<stem>.cal` when present.
        #[arg(long)]
        calibration: Option<PathBuf>,
    },
    /// Monte-Carlo RMSE campaign over the configured distances.
    Campaign,
}

enum Failure {
    Usage(anyhow::Error),
    Processing(anyhow::Error),
}

type Outcome<T> = Result<T, Failure>;

fn usage<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Usage(e.into())
}

fn processing<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Processing(e.into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Processing(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn load_config(cli: &Cli) -> Outcome<CampaignConfig> {
    let mut cfg = match &cli.config {
        Some(path) => parse_config(path).map_err(usage)?,
        None => CampaignConfig::new(ConfigId::I, (0..9).map(|i| 10.0 + 5.0 * i as f64).collect()),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(algorithms) = &cli.algorithms {
        cfg.algorithms = algorithms.clone();
    }
    cfg.validate().map_err(usage)?;
    Ok(cfg)
}

fn log(cli: &Cli, msg: impl AsRef<str>) {
    if cli.verbose {
        eprintln!("{}", msg.as_ref());
    }
}

fn run(cli: Cli) -> Outcome<()> {
    let cfg = load_config(&cli)?;
    fs::create_dir_all(&cli.out)
        .with_context(|| format!("creating {}", cli.out.display()))
        .map_err(processing)?;
    match &cli.command {
        Command::Generate { waveform, slots } => generate(&cli, &cfg, waveform.unwrap_or(cfg.waveform), *slots),
        Command::Simulate {
            distance,
            angle,
            snr,
            no_impairments,
        } => {
            let mut cfg = cfg.clone();
            if let Some(d) = distance {
                cfg.distances = vec![*d];
                if matches!(cfg.snr, SnrPolicy::PerDistance(_)) {
                    cfg.snr = SnrPolicy::Fixed(cfg.snr.at(0));
                }
            }
            if let Some(a) = angle {
                cfg.angle_deg = *a;
            }
            if let Some(s) = snr {
                cfg.snr = SnrPolicy::Fixed(*s);
            }
            if *no_impairments {
                cfg.capture.impairments = false;
            }
            cfg.validate().map_err(usage)?;
            simulate(&cli, &cfg)
        }
        Command::Estimate { input, calibration } => estimate(&cli, &cfg, input, calibration.as_deref()),
        Command::Campaign => campaign(&cli, &cfg),
    }
}

fn generate(cli: &Cli, cfg: &CampaignConfig, id: ConfigId, slots: usize) -> Outcome<()> {
    if slots == 0 {
        return Err(usage(anyhow!("--slots must be at least 1")));
    }
    let wf = id.waveform();
    let w = SrsWaveform::default_for(&wf).map_err(processing)?;
    let signal = w.slot.repeat(slots);
    let capture = MultichannelCapture::new(
        vec![signal.samples],
        wf.sample_rate,
        wf.carrier_freq,
        CaptureLayout::antennas_only(1),
    )
    .map_err(processing)?;
    let stem = cli.out.join("srs");
    write_iq_with(
        &capture,
        &stem,
        &[("waveform", id.to_string()), ("n_slots", slots.to_string()), ("seed", cfg.seed.to_string())],
    )
    .map_err(processing)?;
    log(cli, format!("wrote {} slots of configuration {id} to {}", slots, stem.display()));
    Ok(())
}

fn simulate(cli: &Cli, cfg: &CampaignConfig) -> Outcome<()> {
    let sim = simulate_capture(cfg, cfg.seed).map_err(processing)?;
    let stem = cli.out.join("capture");
    let extra = [
        ("waveform", cfg.waveform.to_string()),
        ("distance_m", cfg.distances[0].to_string()),
        ("angle_deg", cfg.angle_deg.to_string()),
        ("true_angle_deg", format!("{:?}", sim.true_angle_deg)),
        ("snr_db", sim.snr_db.to_string()),
        ("snr_definition", "per resource element, free simulation parameter".to_string()),
        ("seed", cfg.seed.to_string()),
    ];
    write_iq_with(&sim.capture, &stem, &extra).map_err(processing)?;
    let cal = calibration_path(&stem);
    fs::write(&cal, sim.calibration.to_text())
        .with_context(|| format!("writing {}", cal.display()))
        .map_err(processing)?;
    log(
        cli,
        format!(
            "wrote {} samples x {} channels to {} (true angle {:.4} deg)",
            sim.capture.len(),
            sim.capture.n_channels(),
            stem.display(),
            sim.true_angle_deg
        ),
    );
    Ok(())
}

fn estimate(cli: &Cli, cfg: &CampaignConfig, input: &Path, calibration: Option<&Path>) -> Outcome<()> {
    let (capture, meta) = read_iq_with_metadata(input).map_err(processing)?;
    let id = match meta.extra.get("waveform") {
        Some(s) => s.parse::<ConfigId>().map_err(processing)?,
        None => cfg.waveform,
    };
    let wf = id.waveform();
    if (meta.sample_rate - wf.sample_rate).abs() > 1e-6 * wf.sample_rate {
        return Err(processing(anyhow!(
            "recording sampled at {} Hz, configuration {id} expects {} Hz",
            meta.sample_rate,
            wf.sample_rate
        )));
    }
    let table = match calibration {
        Some(p) => read_calibration(p)?,
        None if calibration_path(input).exists() => read_calibration(&calibration_path(input))?,
        None => CalibrationTable::zeros(capture.n_channels()),
    };
    let geom = UlaGeometry::half_wavelength(capture.layout.antennas.len(), meta.carrier_freq).map_err(processing)?;
    let opts = ReceiverOptions {
        methods: cfg.algorithms.clone(),
        sources: SourcePolicy::Auto(cfg.max_sources),
        grid_step: cfg.grid_step,
        stacking: cfg.stacking,
        ..ReceiverOptions::default()
    };
    let rx = Receiver::new(&wf, SrsWaveform::default_for(&wf).map_err(processing)?, geom, opts).map_err(processing)?;
    let snapshot_len = (cfg.capture.snapshot_ms * 1e-3 * wf.sample_rate).round() as usize;
    let results = rx.process_capture(&capture, snapshot_len, &table).map_err(processing)?;
    if results.is_empty() {
        return Err(processing(anyhow!(
            "recording of {} samples holds no whole {} ms snapshot",
            capture.len(),
            cfg.capture.snapshot_ms
        )));
    }
    let path = cli.out.join("snapshots.csv");
    fs::write(&path, snapshots_csv(&results, snapshot_len, &cfg.algorithms))
        .with_context(|| format!("writing {}", path.display()))
        .map_err(processing)?;
    for (i, r) in results.iter().enumerate() {
        let angles: Vec<String> = cfg
            .algorithms
            .iter()
            .map(|m| format!("{m} {}", r.averaged_angles[m].map_or("-".into(), |a| format!("{a:.3}"))))
            .collect();
        log(cli, format!("snapshot {i}: {} slots, {}", r.slot_results.len(), angles.join(", ")));
        for f in &r.failures {
            log(cli, format!("  window {} rejected: {}", f.window_start, f.reason));
        }
    }
    log(cli, format!("wrote {}", path.display()));
    Ok(())
}

fn read_calibration(path: &Path) -> Outcome<CalibrationTable> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(usage)?;
    CalibrationTable::parse(&text)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(usage)
}

fn snapshots_csv(results: &[SnapshotResult], snapshot_len: usize, methods: &[Method]) -> String {
    let mut out = format!("{SNAPSHOT_HEADER}\n");
    for (i, r) in results.iter().enumerate() {
        let sinr = r.averaged_sinr.map_or(String::new(), |s| s.to_string());
        for m in methods {
            let angle = r.averaged_angles[m].map_or(String::new(), |a| a.to_string());
            let kept = r.kept_mask[m].iter().filter(|k| **k).count();
            let _ = writeln!(
                out,
                "{i},{},{m},{angle},{},{kept},{sinr}",
                i * snapshot_len,
                r.slot_results.len()
            );
        }
    }
    out
}

fn campaign(cli: &Cli, cfg: &CampaignConfig) -> Outcome<()> {
    log(
        cli,
        format!(
            "configuration {}: {} distances x {} trials, seed {}",
            cfg.waveform,
            cfg.distances.len(),
            cfg.n_trials,
            cfg.seed
        ),
    );
    let result = run_montecarlo(cfg).map_err(processing)?;
    let csv = cli.out.join(&cfg.output.csv);
    let script = cli.out.join(&cfg.output.plot_script);
    let title = format!("RMSE vs distance, configuration {}", cfg.waveform);
    emit_results(&result, &csv, &script, &title).map_err(processing)?;
    let meta = csv.with_extension("meta");
    fs::write(&meta, campaign_metadata(cfg))
        .with_context(|| format!("writing {}", meta.display()))
        .map_err(processing)?;
    for row in &result.rows {
        log(
            cli,
            format!(
                "{:>6.1} m {:<6} rmse {:.4} bias {:+.4} sinr {:.2} dB valid {}",
                row.distance_m, row.algorithm, row.rmse_deg, row.bias_deg, row.mean_sinr_db, row.n_valid
            ),
        );
    }
    log(cli, format!("wrote {}, {} and {}", csv.display(), script.display(), meta.display()));
    Ok(())
}
