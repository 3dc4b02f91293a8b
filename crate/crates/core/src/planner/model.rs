use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{PlannerError, PomdpParams};
use crate::geom::Vector2;
use crate::porca::{advance, preferred_velocity, AgentState, Intention, Motion, PorcaParams};
use crate::sim::{vehicle_agent, vehicle_transition, Action, Path, VehicleParams, VehicleState};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardParams {
    pub collision_scale: f64,
    pub collision_offset: f64,
    pub accel_penalty: f64,
    pub max_speed: f64,
    /// Extra clearance counted as a collision inside the model (m).
    pub collision_margin: f64,
}

impl Default for RewardParams {
    fn default() -> Self {
        RewardParams {
            collision_scale: 1000.0,
            collision_offset: 0.5,
            accel_penalty: 0.1,
            max_speed: 1.0,
            collision_margin: 0.0,
        }
    }
}

impl RewardParams {
    pub fn validate(&self) -> Result<(), PlannerError> {
        let all_positive = [
            self.collision_scale,
            self.collision_offset,
            self.accel_penalty,
            self.max_speed,
        ]
        .iter()
        .all(|v| *v > 0.0 && v.is_finite());
        if !all_positive || self.collision_margin < 0.0 {
            return Err(PlannerError::InvalidParam(
                "reward parameters must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn collision_penalty(&self, speed: f64) -> f64 {
        -self.collision_scale * (speed * speed + self.collision_offset)
    }

    /// Smallest possible single-step reward.
    pub fn min_step_reward(&self) -> f64 {
        self.collision_penalty(self.max_speed) - 1.0 - self.accel_penalty
    }
}

/// One-step reward at post-transition speed `speed`.
pub fn reward(
    speed: f64,
    action: Action,
    collided: bool,
    goal_reached: bool,
    params: &RewardParams,
) -> f64 {
    if goal_reached && !collided {
        return 0.0;
    }
    let speed_term = (speed - params.max_speed) / params.max_speed;
    let accel_term = if action.changes_speed() {
        -params.accel_penalty
    } else {
        0.0
    };
    let collision_term = if collided {
        params.collision_penalty(speed)
    } else {
        0.0
    };
    collision_term + speed_term + accel_term
}

/// Reactive speed rule on the surface gap to the nearest pedestrian ahead of
/// the vehicle centre.
pub fn reactive_action(
    vehicle: &VehicleState,
    vehicle_radius: f64,
    pedestrians: impl IntoIterator<Item = (Vector2, f64)>,
    d_near: f64,
    d_far: f64,
) -> Action {
    let heading = Vector2::from_angle(vehicle.heading);
    let gap = pedestrians
        .into_iter()
        .filter(|(p, _)| (*p - vehicle.position).dot(heading) > 0.0)
        .map(|(p, r)| p.distance(vehicle.position) - r - vehicle_radius)
        .fold(f64::INFINITY, f64::min);
    if gap < d_near {
        Action::Decelerate
    } else if gap > d_far {
        Action::Accelerate
    } else {
        Action::Maintain
    }
}

/// How pedestrians move inside the planner's model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionModel {
    /// Reactive crowd model with patience and responsibility sharing.
    Porca,
    /// Straight toward the intended goal at preferred speed, ignoring others.
    PrefVel,
}

/// One determinised world inside the search.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelState {
    pub vehicle: VehicleState,
    pub pedestrians: Vec<AgentState>,
    /// Intention index per pedestrian.
    pub intentions: Vec<usize>,
    pub time: f64,
    pub terminal: bool,
}

/// The generative model used for lookahead.
#[derive(Clone, Debug)]
pub struct PlannerModel {
    pub path: Path,
    pub vehicle: VehicleParams,
    pub porca: PorcaParams,
    pub intentions: Vec<Intention>,
    pub dt: f64,
    pub motion: MotionModel,
    pub params: PomdpParams,
}

/// Moves pedestrians one step under sampled intentions, with the vehicle as a
/// fixed-velocity agent, then perturbs positions by `sigma`.
pub fn pedestrian_transition<R: Rng + ?Sized>(
    pedestrians: &[AgentState],
    intentions: &[Intention],
    vehicle: &AgentState,
    params: &PorcaParams,
    dt: f64,
    now: f64,
    sigma: f64,
    rng: &mut R,
) -> Vec<AgentState> {
    let mut agents: Vec<AgentState> = pedestrians.to_vec();
    let mut motions: Vec<Motion> = pedestrians
        .iter()
        .zip(intentions)
        .map(|(a, it)| Motion::Preferred(preferred_velocity(a, it, params)))
        .collect();
    agents.push(vehicle.clone());
    motions.push(Motion::Fixed);
    let mut out = advance(&agents, &motions, params, dt, now).agents;
    out.pop();
    if sigma > 0.0 {
        for a in &mut out {
            let nx: f64 = rng.sample(StandardNormal);
            let ny: f64 = rng.sample(StandardNormal);
            a.position += Vector2::new(nx, ny) * sigma;
        }
    }
    out
}

impl PlannerModel {
    pub fn gamma(&self) -> f64 {
        self.params.gamma
    }

    fn move_pedestrians<R: Rng + ?Sized>(&self, state: &mut ModelState, rng: &mut R) {
        let sigma = self.params.pedestrian_noise;
        match self.motion {
            MotionModel::Porca => {
                let intentions: Vec<Intention> = state
                    .intentions
                    .iter()
                    .map(|&i| self.intentions[i])
                    .collect();
                let veh = vehicle_agent(&state.vehicle, &self.vehicle);
                state.pedestrians = pedestrian_transition(
                    &state.pedestrians,
                    &intentions,
                    &veh,
                    &self.porca,
                    self.dt,
                    state.time,
                    sigma,
                    rng,
                );
            }
            MotionModel::PrefVel => {
                for (a, &i) in state.pedestrians.iter_mut().zip(&state.intentions) {
                    let v = preferred_velocity(a, &self.intentions[i], &self.porca);
                    a.velocity = v;
                    a.position += v * self.dt;
                    if sigma > 0.0 {
                        let nx: f64 = rng.sample(StandardNormal);
                        let ny: f64 = rng.sample(StandardNormal);
                        a.position += Vector2::new(nx, ny) * sigma;
                    }
                }
            }
        }
    }

    /// Advances `state` by one step and returns the reward.
    pub fn step<R: Rng + ?Sized>(
        &self,
        state: &mut ModelState,
        action: Action,
        rng: &mut R,
    ) -> f64 {
        debug_assert!(!state.terminal);
        let sigma_v = self.params.vehicle_noise;
        let noise = (sigma_v > 0.0).then_some((sigma_v, &mut *rng));
        let (vehicle, reached) = vehicle_transition(
            &state.vehicle,
            action,
            &self.path,
            &self.vehicle,
            self.dt,
            noise,
        );
        self.move_pedestrians(state, rng);
        state.vehicle = vehicle;
        state.time += self.dt;
        let limit = self.vehicle.radius + self.params.reward.collision_margin;
        let collided = state
            .pedestrians
            .iter()
            .any(|p| p.position.distance(vehicle.position) < limit + p.radius);
        state.terminal = collided || reached;
        reward(
            vehicle.speed,
            action,
            collided,
            reached,
            &self.params.reward,
        )
    }

    pub fn rollout_action(&self, state: &ModelState) -> Action {
        reactive_action(
            &state.vehicle,
            self.vehicle.radius,
            state.pedestrians.iter().map(|p| (p.position, p.radius)),
            self.params.d_near,
            self.params.d_far,
        )
    }

    /// Optimistic value: accelerate to full speed with nothing in the way.
    pub fn upper_bound(&self, state: &ModelState, steps: usize) -> f64 {
        if state.terminal {
            return 0.0;
        }
        let mut speed = state.vehicle.speed;
        let mut progress = state.vehicle.progress;
        let mut value = 0.0;
        let mut discount = 1.0;
        for _ in 0..steps {
            speed = (speed + self.vehicle.accel * self.dt).min(self.vehicle.max_speed);
            progress += speed * self.dt;
            if progress >= self.path.length() {
                break;
            }
            value +=
                discount * (speed - self.params.reward.max_speed) / self.params.reward.max_speed;
            discount *= self.gamma();
        }
        value
    }
}
