use std::fmt;
use std::str::FromStr;

use super::PredictError;
use crate::geom::Vector2;
use crate::porca::{advance, preferred_velocity, AgentState, Intention, Motion, PorcaParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PredictionModel {
    ConstVel,
    PrefVel,
    Orca,
    Porca,
}

impl PredictionModel {
    pub const ALL: [PredictionModel; 4] = [
        PredictionModel::ConstVel,
        PredictionModel::PrefVel,
        PredictionModel::Orca,
        PredictionModel::Porca,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PredictionModel::ConstVel => "const-vel",
            PredictionModel::PrefVel => "pref-vel",
            PredictionModel::Orca => "orca",
            PredictionModel::Porca => "porca",
        }
    }

    /// Whether the model steers toward a known goal.
    pub fn needs_goal(self) -> bool {
        self != PredictionModel::ConstVel
    }
}

impl fmt::Display for PredictionModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PredictionModel {
    type Err = PredictError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        PredictionModel::ALL
            .into_iter()
            .find(|m| m.name() == key || m.name().replace('-', "") == key)
            .ok_or_else(|| {
                PredictError::Invalid(format!(
                    "unknown model `{s}` (expected const-vel, pref-vel, orca or porca)"
                ))
            })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneAgent {
    pub agent: AgentState,
    pub goal: Option<Vector2>,
}

/// Everything visible at the prediction frame.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Scene {
    pub pedestrians: Vec<SceneAgent>,
    pub vehicle: Option<AgentState>,
}

fn interaction_params(model: PredictionModel, porca: &PorcaParams) -> PorcaParams {
    match model {
        PredictionModel::Orca => PorcaParams {
            tau: porca.tau,
            neighbor_radius: porca.neighbor_radius,
            max_neighbors: porca.max_neighbors,
            arrival_radius: porca.arrival_radius,
            v_opt_mode: porca.v_opt_mode,
            ..PorcaParams::orca()
        },
        _ => porca.clone(),
    }
}

fn arrived(a: &SceneAgent, position: Vector2, params: &PorcaParams) -> bool {
    a.goal
        .is_some_and(|g| position.distance(g) <= params.arrival_radius)
}

/// Predicted positions for the next `frames` frames of every scene
/// pedestrian. Goal-based models return `None` for pedestrians without a goal.
///
/// Interactive models roll the whole scene forward; the vehicle keeps its
/// velocity and pedestrians leave the scene once they reach their goal.
pub fn predict_scene(
    model: PredictionModel,
    scene: &Scene,
    frames: usize,
    dt: f64,
    porca: &PorcaParams,
) -> Vec<Option<Vec<Vector2>>> {
    match model {
        PredictionModel::ConstVel => scene
            .pedestrians
            .iter()
            .map(|p| {
                Some(
                    (1..=frames)
                        .map(|k| p.agent.position + p.agent.velocity * (k as f64 * dt))
                        .collect(),
                )
            })
            .collect(),
        PredictionModel::PrefVel => scene
            .pedestrians
            .iter()
            .map(|p| {
                let goal = p.goal?;
                let mut a = p.agent.clone();
                Some(
                    (0..frames)
                        .map(|_| {
                            let v = preferred_velocity(&a, &Intention::Goal(goal), porca);
                            a.position += v * dt;
                            a.position
                        })
                        .collect(),
                )
            })
            .collect(),
        PredictionModel::Orca | PredictionModel::Porca => simulate(model, scene, frames, dt, porca),
    }
}

fn simulate(
    model: PredictionModel,
    scene: &Scene,
    frames: usize,
    dt: f64,
    porca: &PorcaParams,
) -> Vec<Option<Vec<Vector2>>> {
    let params = interaction_params(model, porca);
    let n = scene.pedestrians.len();
    let mut tracks: Vec<Vec<Vector2>> = vec![Vec::with_capacity(frames); n];
    let mut positions: Vec<Vector2> = scene.pedestrians.iter().map(|p| p.agent.position).collect();
    // Scene index of each active agent; the vehicle is marked with `None`.
    let mut active: Vec<Option<usize>> = (0..n)
        .filter(|&i| !arrived(&scene.pedestrians[i], positions[i], &params))
        .map(Some)
        .collect();
    let mut agents: Vec<AgentState> = active
        .iter()
        .map(|i| scene.pedestrians[i.unwrap()].agent.clone())
        .collect();
    if let Some(v) = &scene.vehicle {
        active.push(None);
        agents.push(v.clone());
    }
    let mut now = 0.0;
    for _ in 0..frames {
        let motions: Vec<Motion> = active
            .iter()
            .zip(&agents)
            .map(|(slot, a)| match slot {
                None => Motion::Fixed,
                Some(i) => match scene.pedestrians[*i].goal {
                    Some(g) => {
                        Motion::Preferred(preferred_velocity(a, &Intention::Goal(g), &params))
                    }
                    None => Motion::Preferred(a.velocity),
                },
            })
            .collect();
        agents = advance(&agents, &motions, &params, dt, now).agents;
        now += dt;
        for (slot, a) in active.iter().zip(&agents) {
            if let Some(i) = slot {
                positions[*i] = a.position;
            }
        }
        for (i, track) in tracks.iter_mut().enumerate() {
            track.push(positions[i]);
        }
        let keep: Vec<bool> = active
            .iter()
            .map(|slot| slot.is_none_or(|i| !arrived(&scene.pedestrians[i], positions[i], &params)))
            .collect();
        let mut k = keep.iter();
        active.retain(|_| *k.next().unwrap());
        let mut k = keep.iter();
        agents.retain(|_| *k.next().unwrap());
    }
    scene
        .pedestrians
        .iter()
        .zip(tracks)
        .map(|(p, t)| p.goal.map(|_| t))
        .collect()
}

/// Prediction for a single scene pedestrian.
pub fn predict_trajectory(
    model: PredictionModel,
    scene: &Scene,
    index: usize,
    frames: usize,
    dt: f64,
    porca: &PorcaParams,
) -> Option<Vec<Vector2>> {
    predict_scene(model, scene, frames, dt, porca).swap_remove(index)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lone(velocity: Vector2, goal: Vector2) -> Scene {
        Scene {
            pedestrians: vec![SceneAgent {
                agent: AgentState::pedestrian(0, Vector2::ZERO, velocity),
                goal: Some(goal),
            }],
            vehicle: None,
        }
    }

    #[test]
    fn lone_pedestrian_models_agree() {
        let scene = lone(Vector2::new(1.2, 0.0), Vector2::new(20.0, 0.0));
        let params = PorcaParams::default();
        let reference =
            predict_trajectory(PredictionModel::ConstVel, &scene, 0, 9, 1.0 / 3.0, &params)
                .unwrap();
        for model in PredictionModel::ALL {
            let p = predict_trajectory(model, &scene, 0, 9, 1.0 / 3.0, &params).unwrap();
            for (a, b) in p.iter().zip(&reference) {
                assert!(a.distance(*b) < 1e-9, "{model}: {a:?} vs {b:?}");
            }
        }
        assert!((reference[8].x - 3.6).abs() < 1e-12);
    }

    #[test]
    fn goal_models_skip_unknown_goals() {
        let mut scene = lone(Vector2::new(1.0, 0.0), Vector2::ZERO);
        scene.pedestrians[0].goal = None;
        let params = PorcaParams::default();
        assert!(
            predict_trajectory(PredictionModel::ConstVel, &scene, 0, 3, 0.33, &params).is_some()
        );
        for model in [
            PredictionModel::PrefVel,
            PredictionModel::Orca,
            PredictionModel::Porca,
        ] {
            assert!(predict_trajectory(model, &scene, 0, 3, 0.33, &params).is_none());
        }
    }

    #[test]
    fn model_names_parse() {
        for m in PredictionModel::ALL {
            assert_eq!(m.name().parse::<PredictionModel>().unwrap(), m);
        }
        assert_eq!(
            "ConstVel".parse::<PredictionModel>().unwrap(),
            PredictionModel::ConstVel
        );
        assert!("kalman".parse::<PredictionModel>().is_err());
    }
}
