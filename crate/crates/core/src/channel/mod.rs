//! Geometric multipath onto a uniform linear array, AWGN, and receiver
//! phase impairments.

mod capture;
mod geometry;
mod impairments;
mod noise;
mod propagate;
mod scene;

pub use capture::{CaptureLayout, LoPair, MultichannelCapture, ReferenceTaps};
pub use geometry::{steering_vector, UlaGeometry};
pub(crate) use geometry::vandermonde;
pub use impairments::{apply_impairments, wrap_phase, ImpairmentModel};
pub use noise::{add_awgn, add_noise_variance, occupied_signal_power};
pub use propagate::propagate;
pub use scene::{
    compute_scene_paths, relative_to_first_arrival, PropagationPath, SceneGeometry, SceneParams,
    Wall,
};
