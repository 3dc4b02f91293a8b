use std::path::Path as FsPath;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::path::Path;
use super::vehicle::{VehicleParams, VehicleState};
use super::world::{Pedestrian, World};
use super::SimError;
use crate::geom::Vector2;
use crate::porca::{AgentState, Intention, PorcaParams};
use crate::rng;

/// How a spawned pedestrian picks its intention.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntentionSpec {
    Stop,
    /// Index into the scenario goal list.
    Goal(usize),
    /// A goal drawn uniformly per trial.
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PedestrianSpawn {
    pub position: Vector2,
    pub intention: IntentionSpec,
}

/// Pedestrians placed uniformly at random in a rectangle each trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrowdSpawn {
    pub count: usize,
    /// Opposite corners of the spawn rectangle.
    pub region: [Vector2; 2],
    #[serde(default = "default_separation")]
    pub min_separation: f64,
    /// Keep spawns at least this far from the vehicle start.
    #[serde(default)]
    pub start_clearance: f64,
    #[serde(default = "default_crowd_intention")]
    pub intention: IntentionSpec,
}

fn default_separation() -> f64 {
    0.6
}

fn default_crowd_intention() -> IntentionSpec {
    IntentionSpec::Random
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleConfig {
    pub path: Path,
    #[serde(default = "default_vmax")]
    pub max_speed: f64,
    #[serde(default = "default_accel")]
    pub accel: f64,
    #[serde(default = "default_vradius")]
    pub radius: f64,
    #[serde(default = "default_clearance")]
    pub clearance: f64,
    #[serde(default)]
    pub start_speed: f64,
}

fn default_vmax() -> f64 {
    VehicleParams::default().max_speed
}

fn default_accel() -> f64 {
    VehicleParams::default().accel
}

fn default_vradius() -> f64 {
    VehicleParams::default().radius
}

fn default_clearance() -> f64 {
    VehicleParams::default().clearance
}

impl VehicleConfig {
    pub fn params(&self) -> VehicleParams {
        VehicleParams {
            max_speed: self.max_speed,
            accel: self.accel,
            radius: self.radius,
            clearance: self.clearance,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PedestrianParams {
    pub radius: f64,
    pub pref_speed: f64,
    pub max_speed: f64,
}

impl Default for PedestrianParams {
    fn default() -> Self {
        PedestrianParams {
            radius: 0.25,
            pref_speed: 1.2,
            max_speed: 1.5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollisionPolicy {
    Terminate,
    Continue,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimParams {
    pub dt: f64,
    pub timeout: f64,
    pub collision_policy: CollisionPolicy,
    /// Ground-truth vehicle speed noise (m/s).
    pub vehicle_noise: f64,
    /// Ground-truth pedestrian position noise per step (m).
    pub pedestrian_noise: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            dt: 1.0 / 3.0,
            timeout: 360.0,
            collision_policy: CollisionPolicy::Terminate,
            vehicle_noise: 0.0,
            pedestrian_noise: 0.0,
        }
    }
}

/// A benchmark scenario as stored on disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub goals: Vec<Vector2>,
    #[serde(default)]
    pub pedestrians: Vec<PedestrianSpawn>,
    #[serde(default)]
    pub crowd: Option<CrowdSpawn>,
    /// Uniform per-trial perturbation of listed spawn positions (m).
    #[serde(default)]
    pub spawn_jitter: f64,
    pub vehicle: VehicleConfig,
    #[serde(default)]
    pub pedestrian: PedestrianParams,
    #[serde(default)]
    pub sim: SimParams,
    #[serde(default)]
    pub porca: PorcaParams,
}

/// Scenarios shipped with the library, by name.
pub const BUILTIN_SCENARIOS: [(&str, &str); 3] = [
    ("s1", include_str!("../../scenarios/s1.json")),
    ("s2", include_str!("../../scenarios/s2.json")),
    ("s3", include_str!("../../scenarios/s3.json")),
];

impl ScenarioConfig {
    pub fn builtin(name: &str) -> Option<Self> {
        BUILTIN_SCENARIOS
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, text)| Self::from_json(text).expect("built-in scenario is valid"))
    }

    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let cfg: ScenarioConfig =
            serde_json::from_str(text).map_err(|e| SimError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<FsPath>) -> Result<Self, SimError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| SimError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::Config(msg));
        if !(self.sim.dt > 0.0 && self.sim.dt.is_finite()) {
            return bad(format!("sim.dt must be positive, got {}", self.sim.dt));
        }
        if !(self.sim.timeout > 0.0 && self.sim.timeout.is_finite()) {
            return bad(format!(
                "sim.timeout must be positive, got {}",
                self.sim.timeout
            ));
        }
        if self.sim.vehicle_noise < 0.0 || self.sim.pedestrian_noise < 0.0 {
            return bad("noise magnitudes must be non-negative".into());
        }
        for (i, g) in self.goals.iter().enumerate() {
            if self.goals[..i].iter().any(|h| h.distance(*g) < 1e-9) {
                return bad(format!("goal {i} duplicates an earlier goal"));
            }
        }
        let v = &self.vehicle;
        if !(v.max_speed > 0.0 && v.accel > 0.0 && v.radius > 0.0) {
            return bad("vehicle max_speed, accel and radius must be positive".into());
        }
        if !(v.clearance >= 0.0 && v.clearance.is_finite()) {
            return bad(format!(
                "vehicle clearance must be non-negative, got {}",
                v.clearance
            ));
        }
        if !(0.0..=v.max_speed).contains(&v.start_speed) {
            return bad(format!(
                "vehicle start_speed {} outside [0, max_speed]",
                v.start_speed
            ));
        }
        let p = &self.pedestrian;
        if !(p.radius > 0.0
            && p.max_speed > 0.0
            && p.pref_speed >= 0.0
            && p.pref_speed <= p.max_speed)
        {
            return bad(
                "pedestrian radius/max_speed must be positive and pref_speed within [0, max_speed]"
                    .into(),
            );
        }
        if !(self.spawn_jitter >= 0.0) {
            return bad("spawn_jitter must be non-negative".into());
        }
        let check_intention = |spec: IntentionSpec| match spec {
            IntentionSpec::Goal(i) if i >= self.goals.len() => bad(format!(
                "goal index {i} out of range ({} goals)",
                self.goals.len()
            )),
            IntentionSpec::Random if self.goals.is_empty() => {
                bad("random intention needs at least one goal".into())
            }
            _ => Ok(()),
        };
        for spawn in &self.pedestrians {
            check_intention(spawn.intention)?;
        }
        if let Some(crowd) = &self.crowd {
            check_intention(crowd.intention)?;
            if crowd.min_separation < 0.0 || crowd.start_clearance < 0.0 {
                return bad("crowd separations must be non-negative".into());
            }
        }
        self.porca
            .validate()
            .map_err(|e| SimError::Config(e.to_string()))
    }

    pub fn vehicle_params(&self) -> VehicleParams {
        self.vehicle.params()
    }

    /// Intention set tracked by beliefs: every goal, then stop.
    pub fn intention_set(&self) -> Vec<Intention> {
        self.goals
            .iter()
            .map(|g| Intention::Goal(*g))
            .chain(std::iter::once(Intention::Stop))
            .collect()
    }

    fn resolve<R: Rng>(&self, spec: IntentionSpec, rng: &mut R) -> (Intention, Option<usize>) {
        match spec {
            IntentionSpec::Stop => (Intention::Stop, None),
            IntentionSpec::Goal(i) => (Intention::Goal(self.goals[i]), Some(i)),
            IntentionSpec::Random => {
                let i = rng.gen_range(0..self.goals.len());
                (Intention::Goal(self.goals[i]), Some(i))
            }
        }
    }

    fn pedestrian(&self, id: u32, position: Vector2) -> AgentState {
        AgentState::pedestrian(id, position, Vector2::ZERO)
            .with_radius(self.pedestrian.radius)
            .with_speeds(self.pedestrian.pref_speed, self.pedestrian.max_speed)
    }

    /// The initial world for a trial. All randomness comes from `seed`.
    pub fn instantiate(&self, seed: u64) -> Result<World, SimError> {
        let mut rng = rng::stream(seed, &[0x5eed, 1]);
        let vehicle = VehicleState::at_start(&self.vehicle.path, self.vehicle.start_speed);
        let mut pedestrians: Vec<Pedestrian> = Vec::new();
        for spawn in &self.pedestrians {
            let jitter = if self.spawn_jitter > 0.0 {
                Vector2::new(
                    rng.gen_range(-self.spawn_jitter..=self.spawn_jitter),
                    rng.gen_range(-self.spawn_jitter..=self.spawn_jitter),
                )
            } else {
                Vector2::ZERO
            };
            let (intention, goal_index) = self.resolve(spawn.intention, &mut rng);
            let id = pedestrians.len() as u32;
            pedestrians.push(Pedestrian {
                agent: self.pedestrian(id, spawn.position + jitter),
                intention,
                goal_index,
            });
        }
        if let Some(crowd) = &self.crowd {
            let lo = Vector2::new(
                crowd.region[0].x.min(crowd.region[1].x),
                crowd.region[0].y.min(crowd.region[1].y),
            );
            let hi = Vector2::new(
                crowd.region[0].x.max(crowd.region[1].x),
                crowd.region[0].y.max(crowd.region[1].y),
            );
            let mut placed = 0;
            let mut attempts = 0;
            while placed < crowd.count {
                attempts += 1;
                if attempts > 10_000 * (crowd.count + 1) {
                    return Err(SimError::Config(format!(
                        "could not place {} crowd pedestrians with separation {}",
                        crowd.count, crowd.min_separation
                    )));
                }
                let p = Vector2::new(rng.gen_range(lo.x..=hi.x), rng.gen_range(lo.y..=hi.y));
                let clearance =
                    crowd.start_clearance + self.vehicle.radius + self.pedestrian.radius;
                if p.distance(vehicle.position) < clearance {
                    continue;
                }
                if pedestrians
                    .iter()
                    .any(|q| q.agent.position.distance(p) < crowd.min_separation)
                {
                    continue;
                }
                let (intention, goal_index) = self.resolve(crowd.intention, &mut rng);
                let id = pedestrians.len() as u32;
                pedestrians.push(Pedestrian {
                    agent: self.pedestrian(id, p),
                    intention,
                    goal_index,
                });
                placed += 1;
            }
        }
        Ok(World::new(vehicle, pedestrians))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "name": "t",
        "goals": [[5, 5], [5, -5]],
        "pedestrians": [{"position": [3, 0], "intention": "stop"},
                        {"position": [4, 1], "intention": {"goal": 1}}],
        "vehicle": {"path": [[0, 0], [16, 0]]}
    }"#;

    #[test]
    fn parses_minimal_config() {
        let cfg = ScenarioConfig::from_json(MINIMAL).unwrap();
        assert_eq!(cfg.sim.dt, 1.0 / 3.0);
        assert_eq!(cfg.vehicle.path.length(), 16.0);
        let world = cfg.instantiate(1).unwrap();
        assert_eq!(world.pedestrians.len(), 2);
        assert_eq!(world.pedestrians[0].intention, Intention::Stop);
        assert_eq!(
            world.pedestrians[1].intention,
            Intention::Goal(Vector2::new(5.0, -5.0))
        );
        assert_eq!(cfg.intention_set().len(), 3);
    }

    #[test]
    fn builtins_parse() {
        for (name, _) in BUILTIN_SCENARIOS {
            let cfg = ScenarioConfig::builtin(name).unwrap();
            assert_eq!(cfg.name, name);
            cfg.instantiate(0).unwrap();
        }
        assert!(ScenarioConfig::builtin("s9").is_none());
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let unknown = MINIMAL.replacen("\"name\"", "\"colour\": 1, \"name\"", 1);
        assert!(ScenarioConfig::from_json(&unknown).is_err());
        let bad_goal = MINIMAL.replace("{\"goal\": 1}", "{\"goal\": 7}");
        assert!(ScenarioConfig::from_json(&bad_goal).is_err());
        let dup = MINIMAL.replace("[5, -5]", "[5, 5]");
        assert!(ScenarioConfig::from_json(&dup).is_err());
    }
}
