//! Closed-loop crowd simulation: a vehicle driving a fixed path under speed
//! actions among reactive pedestrians.

pub mod log;
pub mod path;
pub mod scenario;
pub mod trial;
pub mod vehicle;
pub mod world;

use thiserror::Error;

pub use log::{read_log, render_svg, write_log, LogRecord};
pub use path::Path;
pub use scenario::{
    CollisionPolicy, IntentionSpec, PedestrianParams, ScenarioConfig, SimParams, BUILTIN_SCENARIOS,
};
pub use trial::{run_trial, summarize, Summary, TrialMetrics, TrialOptions, TrialOutcome};
pub use vehicle::{commanded_speed, vehicle_transition, Action, VehicleParams, VehicleState};
pub use world::{
    detect_collision, step_world, vehicle_agent, Environment, Observation, Pedestrian,
    PedestrianObs, StepReport, World, VEHICLE_ID,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("invalid scenario: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("log line {line}: {message}")]
    Log { line: usize, message: String },
}
