use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::path::Path;
use super::scenario::{PedestrianParams, ScenarioConfig, SimParams};
use super::vehicle::{vehicle_transition, Action, VehicleParams, VehicleState};
use crate::geom::Vector2;
use crate::porca::{advance, preferred_velocity, AgentState, Intention, Motion, PorcaParams};

/// Agent id used for the vehicle inside the collision-avoidance model.
pub const VEHICLE_ID: u32 = u32::MAX;

#[derive(Clone, Debug, PartialEq)]
pub struct Pedestrian {
    pub agent: AgentState,
    pub intention: Intention,
    pub goal_index: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct World {
    pub time: f64,
    pub step: u64,
    pub vehicle: VehicleState,
    pub pedestrians: Vec<Pedestrian>,
    pub goal_reached: bool,
}

impl World {
    pub fn new(vehicle: VehicleState, pedestrians: Vec<Pedestrian>) -> Self {
        World {
            time: 0.0,
            step: 0,
            vehicle,
            pedestrians,
            goal_reached: false,
        }
    }

    pub fn observe(&self) -> Observation {
        Observation {
            time: self.time,
            vehicle: self.vehicle,
            pedestrians: self
                .pedestrians
                .iter()
                .map(|p| PedestrianObs {
                    id: p.agent.id,
                    position: p.agent.position,
                    velocity: p.agent.velocity,
                })
                .collect(),
        }
    }
}

/// What a controller sees: full vehicle state and pedestrian positions and
/// velocities, without intentions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub time: f64,
    pub vehicle: VehicleState,
    pub pedestrians: Vec<PedestrianObs>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PedestrianObs {
    pub id: u32,
    pub position: Vector2,
    pub velocity: Vector2,
}

/// Static parts of a simulation: geometry and parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Environment {
    pub path: Path,
    pub goals: Vec<Vector2>,
    pub vehicle: VehicleParams,
    pub pedestrian: PedestrianParams,
    pub sim: SimParams,
    pub porca: PorcaParams,
}

impl Environment {
    pub fn from_scenario(cfg: &ScenarioConfig) -> Self {
        Environment {
            path: cfg.vehicle.path.clone(),
            goals: cfg.goals.clone(),
            vehicle: cfg.vehicle_params(),
            pedestrian: cfg.pedestrian.clone(),
            sim: cfg.sim.clone(),
            porca: cfg.porca.clone(),
        }
    }

    pub fn intention_set(&self) -> Vec<Intention> {
        self.goals
            .iter()
            .map(|g| Intention::Goal(*g))
            .chain(std::iter::once(Intention::Stop))
            .collect()
    }
}

/// The vehicle as seen by pedestrians: a disc widened by the clearance they
/// keep, moving at its current velocity.
pub fn vehicle_agent(vehicle: &VehicleState, params: &VehicleParams) -> AgentState {
    AgentState::vehicle(
        VEHICLE_ID,
        vehicle.position,
        vehicle.velocity(),
        params.radius + params.clearance,
        params.max_speed,
    )
}

/// Ids of pedestrians overlapping the vehicle (strict inequality).
pub fn detect_collision(world: &World, env: &Environment) -> Vec<u32> {
    world
        .pedestrians
        .iter()
        .filter(|p| {
            p.agent.position.distance(world.vehicle.position) < p.agent.radius + env.vehicle.radius
        })
        .map(|p| p.agent.id)
        .collect()
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepReport {
    pub collided: Vec<u32>,
    /// Pedestrians whose constraints were infeasible this step.
    pub infeasible: Vec<u32>,
}

/// Advances vehicle and pedestrians one step from the same snapshot.
pub fn step_world<R: Rng>(
    world: &mut World,
    env: &Environment,
    action: Action,
    rng: &mut R,
) -> StepReport {
    let dt = env.sim.dt;
    let mut agents: Vec<AgentState> = Vec::with_capacity(world.pedestrians.len() + 1);
    let mut motions: Vec<Motion> = Vec::with_capacity(world.pedestrians.len() + 1);
    for p in &world.pedestrians {
        agents.push(p.agent.clone());
        motions.push(Motion::Preferred(preferred_velocity(
            &p.agent,
            &p.intention,
            &env.porca,
        )));
    }
    agents.push(vehicle_agent(&world.vehicle, &env.vehicle));
    motions.push(Motion::Fixed);

    let noise = env.sim.vehicle_noise;
    let (vehicle, reached) = if noise > 0.0 {
        vehicle_transition(
            &world.vehicle,
            action,
            &env.path,
            &env.vehicle,
            dt,
            Some((noise, &mut *rng)),
        )
    } else {
        vehicle_transition::<R>(&world.vehicle, action, &env.path, &env.vehicle, dt, None)
    };

    let outcome = advance(&agents, &motions, &env.porca, dt, world.time);
    for (ped, mut next) in world.pedestrians.iter_mut().zip(outcome.agents) {
        if env.sim.pedestrian_noise > 0.0 {
            let nx: f64 = rng.sample(StandardNormal);
            let ny: f64 = rng.sample(StandardNormal);
            next.position += Vector2::new(nx, ny) * env.sim.pedestrian_noise;
        }
        ped.agent = next;
    }
    world.vehicle = vehicle;
    world.goal_reached |= reached;
    world.step += 1;
    world.time = world.step as f64 * dt;

    StepReport {
        collided: detect_collision(world, env),
        infeasible: outcome
            .infeasible
            .into_iter()
            .filter(|&id| id != VEHICLE_ID)
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::scenario::ScenarioConfig;
    use rand::rngs::mock::StepRng;

    fn env_with(peds: &str) -> (World, Environment) {
        let text = format!(
            r#"{{"name": "t", "goals": [[5, 5]], "pedestrians": [{peds}],
                "vehicle": {{"path": [[0, 0], [16, 0]], "start_speed": 0.6}}}}"#
        );
        let cfg = ScenarioConfig::from_json(&text).unwrap();
        (
            cfg.instantiate(0).unwrap(),
            Environment::from_scenario(&cfg),
        )
    }

    #[test]
    fn empty_crowd_reduces_to_vehicle_transition() {
        let (mut world, env) = env_with("");
        step_world(
            &mut world,
            &env,
            Action::Accelerate,
            &mut StepRng::new(0, 1),
        );
        let v = 0.6 + 0.5 / 3.0;
        assert!((world.vehicle.speed - v).abs() < 1e-12);
        assert!((world.vehicle.position.x - v / 3.0).abs() < 1e-12);
    }

    #[test]
    fn far_stationary_crowd_stays_put() {
        let (mut world, env) = env_with(r#"{"position": [4, 9], "intention": "stop"}"#);
        step_world(&mut world, &env, Action::Maintain, &mut StepRng::new(0, 1));
        assert_eq!(world.pedestrians[0].agent.position, Vector2::new(4.0, 9.0));
        assert!((world.vehicle.position.x - 0.2).abs() < 1e-12);
    }

    #[test]
    fn collision_uses_strict_inequality() {
        let (mut world, env) = env_with(r#"{"position": [6, 0], "intention": "stop"}"#);
        world.pedestrians[0].agent.position = Vector2::new(1.25, 0.0);
        assert!(detect_collision(&world, &env).is_empty());
        world.pedestrians[0].agent.position = Vector2::new(1.24, 0.0);
        assert_eq!(detect_collision(&world, &env), vec![0]);
        world.pedestrians[0].agent.position = Vector2::new(5.0, 0.0);
        assert!(detect_collision(&world, &env).is_empty());
    }
}
