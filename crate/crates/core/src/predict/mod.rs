//! Short-horizon trajectory prediction on recorded crowds: dataset I/O,
//! the competing motion models, windowed evaluation and a synthetic
//! dataset generator.

pub mod dataset;
pub mod eval;
pub mod models;
pub mod synth;

use thiserror::Error;

pub use dataset::{
    load_goals, load_trajectories, write_goals, write_trajectories, Track, TrajectoryDataset,
};
pub use eval::{evaluate, horizon_frames, mean_displacement, success_rate, EvalConfig, ModelScore};
pub use models::{predict_scene, predict_trajectory, PredictionModel, Scene, SceneAgent};
pub use synth::{synthesize, SynthParams};

#[derive(Debug, Error)]
pub enum PredictError {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("write failed: {0}")]
    Write(String),
    #[error("predicted {predicted} positions but the ground truth has {truth}")]
    LengthMismatch { predicted: usize, truth: usize },
    #[error("horizon {horizon} s is not a whole number of {interval} s frames")]
    Horizon { horizon: f64, interval: f64 },
    #[error("{0}")]
    Invalid(String),
}
