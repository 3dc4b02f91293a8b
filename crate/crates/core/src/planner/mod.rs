//! Intention-aware speed planning: belief tracking over pedestrian intentions,
//! the generative model used for lookahead, a budgeted belief-tree search and
//! the baseline controllers.

pub mod belief;
pub mod controllers;
pub mod model;
pub mod search;

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use belief::{belief_update, Belief, BeliefUpdate};
pub use controllers::{ConstSpeedController, PomdpController, ReactiveController};
pub use model::{reactive_action, reward, MotionModel, PlannerModel, RewardParams};
pub use search::{plan_action, PlanResult};

use crate::sim::{Action, Environment, Observation};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PomdpParams {
    pub gamma: f64,
    pub search_depth: usize,
    pub scenario_count: usize,
    /// Wall-clock budget per plan; `None` searches until `max_trials`.
    pub planning_budget: Option<f64>,
    /// Cap on search trials per plan, keeping unbudgeted runs deterministic.
    pub max_trials: usize,
    pub max_tracked: usize,
    /// Pedestrians farther than this from the vehicle are left out of the model (m).
    pub model_radius: f64,
    pub max_modeled: usize,
    pub obs_cell: f64,
    pub max_children: usize,
    /// Stop searching once the root bound gap falls below this.
    pub gap_tolerance: f64,
    pub belief_sigma: f64,
    pub pedestrian_noise: f64,
    pub vehicle_noise: f64,
    pub d_near: f64,
    pub d_far: f64,
    pub reward: RewardParams,
}

impl Default for PomdpParams {
    fn default() -> Self {
        PomdpParams {
            gamma: 0.95,
            search_depth: 10,
            scenario_count: 100,
            planning_budget: None,
            max_trials: 64,
            max_tracked: 6,
            model_radius: 8.0,
            max_modeled: 12,
            obs_cell: 0.3,
            max_children: 8,
            gap_tolerance: 1e-3,
            belief_sigma: 0.2,
            pedestrian_noise: 0.05,
            vehicle_noise: 0.02,
            d_near: 1.5,
            d_far: 4.0,
            reward: RewardParams::default(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlannerError {
    #[error("invalid planner parameter: {0}")]
    InvalidParam(String),
    #[error(
        "unknown algorithm `{0}` (expected porca-pomdp, prefvel-pomdp, reactive or const-speed)"
    )]
    UnknownAlgorithm(String),
}

/// The benchmarked speed controllers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algorithm {
    PorcaPomdp,
    PrefVelPomdp,
    Reactive,
    ConstSpeed,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::PorcaPomdp,
        Algorithm::PrefVelPomdp,
        Algorithm::Reactive,
        Algorithm::ConstSpeed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::PorcaPomdp => "porca-pomdp",
            Algorithm::PrefVelPomdp => "prefvel-pomdp",
            Algorithm::Reactive => "reactive",
            Algorithm::ConstSpeed => "const-speed",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = PlannerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s.trim())
            .ok_or_else(|| PlannerError::UnknownAlgorithm(s.to_string()))
    }
}

/// Settings for every controller, overridable as one document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerParams {
    pub planner: PomdpParams,
    /// Target speed of the constant-speed baseline (m/s).
    pub const_speed: f64,
}

impl Default for ControllerParams {
    fn default() -> Self {
        ControllerParams {
            planner: PomdpParams::default(),
            const_speed: 0.66,
        }
    }
}

impl ControllerParams {
    pub fn validate(&self, env: &Environment) -> Result<(), PlannerError> {
        self.planner.validate()?;
        if !(self.const_speed >= 0.0 && self.const_speed <= env.vehicle.max_speed) {
            return Err(PlannerError::InvalidParam(format!(
                "const_speed {} outside [0, {}]",
                self.const_speed, env.vehicle.max_speed
            )));
        }
        Ok(())
    }
}

/// A fresh controller for one trial.
pub fn build_controller(
    algorithm: Algorithm,
    env: &Environment,
    params: &ControllerParams,
) -> Result<Box<dyn Controller>, PlannerError> {
    params.validate(env)?;
    let p = &params.planner;
    Ok(match algorithm {
        Algorithm::PorcaPomdp => Box::new(PomdpController::new(env, p.clone(), MotionModel::Porca)),
        Algorithm::PrefVelPomdp => {
            Box::new(PomdpController::new(env, p.clone(), MotionModel::PrefVel))
        }
        Algorithm::Reactive => Box::new(ReactiveController::new(env, p.d_near, p.d_far)),
        Algorithm::ConstSpeed => Box::new(ConstSpeedController::new(params.const_speed, env)),
    })
}

impl PomdpParams {
    pub fn validate(&self) -> Result<(), PlannerError> {
        let bad = |m: &str| Err(PlannerError::InvalidParam(m.to_string()));
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("gamma must lie in (0, 1)");
        }
        if self.search_depth == 0 || self.scenario_count == 0 || self.max_trials == 0 {
            return bad("search_depth, scenario_count and max_trials must be at least 1");
        }
        if let Some(b) = self.planning_budget {
            if !(b > 0.0 && b.is_finite()) {
                return bad("planning_budget must be positive");
            }
        }
        if self.max_children == 0 || self.max_tracked == 0 {
            return bad("max_children and max_tracked must be at least 1");
        }
        if !(self.obs_cell > 0.0 && self.belief_sigma > 0.0) {
            return bad("obs_cell and belief_sigma must be positive");
        }
        if self.pedestrian_noise < 0.0 || self.vehicle_noise < 0.0 {
            return bad("noise magnitudes must be non-negative");
        }
        if !(0.0 < self.d_near && self.d_near < self.d_far) {
            return bad("need 0 < d_near < d_far");
        }
        self.reward.validate()
    }
}

/// A controller's choice plus search diagnostics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Decision {
    pub action: Action,
    /// The search could not finish a root expansion and used the rollout policy.
    pub fallback: bool,
    pub elapsed: Duration,
}

impl Decision {
    pub fn immediate(action: Action) -> Self {
        Decision {
            action,
            fallback: false,
            elapsed: Duration::ZERO,
        }
    }
}

/// Anything that chooses a speed action from an observation and a belief.
pub trait Controller {
    fn name(&self) -> &str;

    fn act(&mut self, obs: &Observation, belief: &Belief) -> Decision;

    /// Whether the harness should maintain a belief for this controller.
    fn uses_belief(&self) -> bool {
        false
    }

    /// Likelihood scale for the harness's belief updates (m).
    fn belief_sigma(&self) -> f64 {
        PomdpParams::default().belief_sigma
    }

    /// Called before each trial.
    fn reset(&mut self, _seed: u64) {}
}
