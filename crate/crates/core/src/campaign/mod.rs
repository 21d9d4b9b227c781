//! Campaign configuration, IQ recordings, scene synthesis and Monte-Carlo
//! RMSE runs.

mod config;
mod iq;
mod montecarlo;
mod scenario;
mod simulate;

pub use config::{
    parse_config, parse_config_str, CampaignConfig, CaptureSettings, OutputPaths, SnrPolicy, DEFAULT_SNR_DB,
    DEFAULT_TRIALS,
};
pub use iq::{
    calibration_path, channel_path, meta_path, read_iq, read_iq_with_metadata, read_metadata, write_iq, write_iq_with,
    IqMetadata,
};
pub use montecarlo::{
    campaign_metadata, campaign_receiver, emit_results, parse_results_csv, plot_script, results_csv, run_montecarlo, CampaignResult,
    CampaignRow, CSV_HEADER,
};
pub use scenario::{add_re_noise, derive_seed, impair, random_impairments, sample_snr_db, scene_paths, synthesize};
pub use simulate::{simulate_capture, SimulatedCapture};
