use std::time::{Duration, Instant};

use super::belief::Belief;
use super::model::{reactive_action, ModelState, MotionModel, PlannerModel};
use super::search::{plan_action, Particle, PlanResult};
use super::{Controller, Decision, PomdpParams};
use crate::geom::Vector2;
use crate::porca::AgentState;
use crate::rng;
use crate::sim::{Action, Environment, Observation};

/// Keeps a target speed within half an acceleration step.
#[derive(Clone, Debug)]
pub struct ConstSpeedController {
    pub target: f64,
    pub accel_step: f64,
}

impl ConstSpeedController {
    pub fn new(target: f64, env: &Environment) -> Self {
        assert!(
            target <= env.vehicle.max_speed,
            "target above the vehicle's maximum speed"
        );
        ConstSpeedController {
            target,
            accel_step: env.vehicle.accel * env.sim.dt,
        }
    }

    pub fn action_for(&self, speed: f64) -> Action {
        let band = 0.5 * self.accel_step;
        if speed < self.target - band {
            Action::Accelerate
        } else if speed > self.target + band {
            Action::Decelerate
        } else {
            Action::Maintain
        }
    }
}

impl Controller for ConstSpeedController {
    fn name(&self) -> &str {
        "const-speed"
    }

    fn act(&mut self, obs: &Observation, _belief: &Belief) -> Decision {
        Decision::immediate(self.action_for(obs.vehicle.speed))
    }
}

/// Two-threshold rule on the gap to the nearest pedestrian ahead.
#[derive(Clone, Debug)]
pub struct ReactiveController {
    pub d_near: f64,
    pub d_far: f64,
    pub vehicle_radius: f64,
    pub pedestrian_radius: f64,
}

impl ReactiveController {
    pub fn new(env: &Environment, d_near: f64, d_far: f64) -> Self {
        assert!(0.0 < d_near && d_near < d_far, "need 0 < d_near < d_far");
        ReactiveController {
            d_near,
            d_far,
            vehicle_radius: env.vehicle.radius,
            pedestrian_radius: env.pedestrian.radius,
        }
    }
}

impl Controller for ReactiveController {
    fn name(&self) -> &str {
        "reactive"
    }

    fn act(&mut self, obs: &Observation, _belief: &Belief) -> Decision {
        let peds = obs
            .pedestrians
            .iter()
            .map(|p| (p.position, self.pedestrian_radius));
        Decision::immediate(reactive_action(
            &obs.vehicle,
            self.vehicle_radius,
            peds,
            self.d_near,
            self.d_far,
        ))
    }
}

/// Belief-tree search over sampled intentions.
#[derive(Clone, Debug)]
pub struct PomdpController {
    name: String,
    model: PlannerModel,
    template: AgentState,
    seed: u64,
    calls: u64,
    pub last: Option<PlanResult>,
}

impl PomdpController {
    pub fn new(env: &Environment, params: PomdpParams, motion: MotionModel) -> Self {
        let mut params = params;
        params.reward.max_speed = env.vehicle.max_speed;
        let model = PlannerModel {
            path: env.path.clone(),
            vehicle: env.vehicle.clone(),
            porca: env.porca.clone(),
            intentions: env.intention_set(),
            dt: env.sim.dt,
            motion,
            params,
        };
        let name = match motion {
            MotionModel::Porca => "porca-pomdp",
            MotionModel::PrefVel => "prefvel-pomdp",
        };
        let template = AgentState::pedestrian(0, Vector2::ZERO, Vector2::ZERO)
            .with_radius(env.pedestrian.radius)
            .with_speeds(env.pedestrian.pref_speed, env.pedestrian.max_speed);
        PomdpController {
            name: name.to_string(),
            model,
            template,
            seed: 0,
            calls: 0,
            last: None,
        }
    }

    pub fn model(&self) -> &PlannerModel {
        &self.model
    }

    /// Pedestrians that enter the model, nearest first by path-frame distance.
    pub fn modeled(&self, obs: &Observation) -> Vec<usize> {
        let p = &self.model.params;
        let mut found: Vec<(f64, u32, usize)> = obs
            .pedestrians
            .iter()
            .enumerate()
            .filter(|(_, o)| o.position.distance(obs.vehicle.position) <= p.model_radius)
            .map(|(i, o)| {
                let (s, lateral) = self.model.path.project(o.position);
                ((s - obs.vehicle.progress).hypot(lateral), o.id, i)
            })
            .collect();
        found.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        found.truncate(p.max_modeled);
        found.into_iter().map(|(_, _, i)| i).collect()
    }

    /// One determinised scenario per particle, intentions drawn from `belief`.
    pub fn particles(&self, obs: &Observation, belief: &Belief, seed: u64) -> Vec<Particle> {
        let chosen = self.modeled(obs);
        let pedestrians: Vec<AgentState> = chosen
            .iter()
            .map(|&i| {
                let o = &obs.pedestrians[i];
                let mut a = self.template.clone();
                a.id = o.id;
                a.position = o.position;
                a.velocity = o.velocity;
                a
            })
            .collect();
        (0..self.model.params.scenario_count as u64)
            .map(|k| {
                let mut rng = rng::stream(seed, &[k, u64::MAX]);
                let intentions = pedestrians
                    .iter()
                    .map(|a| belief.sample(a.id, &mut rng))
                    .collect();
                Particle {
                    scenario: k,
                    state: ModelState {
                        vehicle: obs.vehicle,
                        pedestrians: pedestrians.clone(),
                        intentions,
                        time: obs.time,
                        terminal: false,
                    },
                }
            })
            .collect()
    }

    pub fn plan(&mut self, obs: &Observation, belief: &Belief) -> PlanResult {
        let start = Instant::now();
        // Keep a small margin for the caller's own bookkeeping.
        let deadline = self
            .model
            .params
            .planning_budget
            .map(|b| start + Duration::from_secs_f64(b * 0.9));
        let seed = rng::mix(self.seed, &[self.calls]);
        self.calls += 1;
        let particles = self.particles(obs, belief, seed);
        plan_action(&self.model, particles, seed, deadline)
    }
}

impl Controller for PomdpController {
    fn name(&self) -> &str {
        &self.name
    }

    fn act(&mut self, obs: &Observation, belief: &Belief) -> Decision {
        let start = Instant::now();
        let result = self.plan(obs, belief);
        let decision = Decision {
            action: result.action,
            fallback: result.fallback,
            elapsed: start.elapsed(),
        };
        self.last = Some(result);
        decision
    }

    fn uses_belief(&self) -> bool {
        true
    }

    fn belief_sigma(&self) -> f64 {
        self.model.params.belief_sigma
    }

    fn reset(&mut self, seed: u64) {
        self.seed = seed;
        self.calls = 0;
        self.last = None;
    }
}
