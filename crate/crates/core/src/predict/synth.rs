use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::dataset::{Track, TrajectoryDataset, VEHICLE_ROW_ID};
use super::PredictError;
use crate::geom::Vector2;
use crate::porca::{advance, preferred_velocity, AgentState, Intention, Motion, PorcaParams};
use crate::rng;
use crate::sim::{PedestrianParams, VEHICLE_ID};

/// Crossing scenes: pedestrians walk between opposite edges of a square
/// while a vehicle drives straight through it at constant speed. By default
/// they cross the vehicle's lane from both sides and arrive over ten seconds.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthParams {
    pub scenes: usize,
    /// Total pedestrians, spread as evenly as possible over the scenes.
    pub pedestrians: usize,
    pub frame_interval: f64,
    /// Standard deviation of the Gaussian noise on pedestrian positions (m).
    pub noise: f64,
    pub seed: u64,
    /// Half the side of the square walking area (m).
    pub half_extent: f64,
    pub vehicle_speed: f64,
    pub vehicle_radius: f64,
    pub max_frames: usize,
    /// Pedestrians enter at a uniformly drawn frame in `[0, stagger)`.
    pub stagger: usize,
    /// Spawn on the two edges across the vehicle's lane only.
    pub two_sided: bool,
    pub porca: PorcaParams,
    pub pedestrian: PedestrianParams,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            scenes: 6,
            pedestrians: 46,
            frame_interval: 0.33,
            noise: 0.0,
            seed: 0,
            half_extent: 8.0,
            vehicle_speed: 1.0,
            vehicle_radius: 1.0,
            max_frames: 240,
            stagger: 30,
            two_sided: true,
            porca: PorcaParams::default(),
            pedestrian: PedestrianParams::default(),
        }
    }
}

/// Frames reserved per scene so scenes never share a frame index.
const SCENE_STRIDE: i64 = 10_000;

fn edge_point<R: Rng + ?Sized>(side: usize, half: f64, rng: &mut R) -> Vector2 {
    let t = rng.gen_range(-0.8 * half..0.8 * half);
    match side {
        0 => Vector2::new(-half, t),
        1 => Vector2::new(half, t),
        2 => Vector2::new(t, -half),
        _ => Vector2::new(t, half),
    }
}

/// Generates the dataset with goals filled in. Each pedestrian's track ends
/// on the frame it reaches its goal.
pub fn synthesize(params: &SynthParams) -> Result<TrajectoryDataset, PredictError> {
    if params.scenes == 0 || params.pedestrians < params.scenes {
        return Err(PredictError::Invalid(
            "need at least one pedestrian per scene".into(),
        ));
    }
    if !(params.frame_interval > 0.0 && params.noise >= 0.0 && params.half_extent > 1.0) {
        return Err(PredictError::Invalid(
            "frame interval, noise or extent out of range".into(),
        ));
    }
    params
        .porca
        .validate()
        .map_err(|e| PredictError::Invalid(e.to_string()))?;
    let noise = Normal::new(0.0, params.noise).map_err(|e| PredictError::Invalid(e.to_string()))?;
    let dt = params.frame_interval;
    let half = params.half_extent;
    let mut ds = TrajectoryDataset::new(dt);
    let mut vehicle_track = Track::new(VEHICLE_ROW_ID);

    for scene in 0..params.scenes {
        let count = params.pedestrians / params.scenes
            + usize::from(scene < params.pedestrians % params.scenes);
        let mut rng = rng::stream(params.seed, &[0x5c3e, scene as u64]);
        let mut noise_rng = rng::stream(params.seed, &[0x5c3e, scene as u64, 1]);
        let base = ds.pedestrians.len();
        let frame0 = scene as i64 * SCENE_STRIDE;

        // Vehicle crosses along x, alternating direction, at a random lane offset.
        let dir = if scene % 2 == 0 { 1.0 } else { -1.0 };
        let lane = rng.gen_range(-0.3 * half..0.3 * half);
        let mut vehicle = AgentState::vehicle(
            VEHICLE_ID,
            Vector2::new(-dir * (half + 1.0), lane),
            Vector2::new(dir * params.vehicle_speed, 0.0),
            params.vehicle_radius,
            params.vehicle_speed,
        );

        let mut agents: Vec<AgentState> = Vec::with_capacity(count);
        let mut goals: Vec<Vector2> = Vec::with_capacity(count);
        let mut entry: Vec<i64> = Vec::with_capacity(count);
        for k in 0..count {
            let side = if params.two_sided {
                2 + rng.gen_range(0..2usize)
            } else {
                rng.gen_range(0..4usize)
            };
            let start = edge_point(side, half, &mut rng);
            let goal = edge_point(side ^ 1, half, &mut rng);
            entry.push(rng.gen_range(0..params.stagger.max(1)) as i64);
            agents.push(
                AgentState::pedestrian((base + k) as u32, start, Vector2::ZERO)
                    .with_radius(params.pedestrian.radius)
                    .with_speeds(params.pedestrian.pref_speed, params.pedestrian.max_speed),
            );
            goals.push(goal);
        }
        for (k, g) in goals.iter().enumerate() {
            let id = (base + k).to_string();
            ds.goals.insert(id.clone(), *g);
            ds.pedestrians.push(Track::new(id));
        }
        let min_gap = 2.0 * params.pedestrian.radius + 0.3;

        // Scene index of each pedestrian currently walking.
        let mut active: Vec<usize> = Vec::new();
        let mut pending: Vec<usize> = (0..count).collect();
        let mut now = 0.0;
        for f in 0..=params.max_frames as i64 {
            // Entries blocked by someone standing on the spawn point wait a frame.
            let mut waiting = Vec::new();
            for k in pending {
                let clear = active
                    .iter()
                    .all(|&j| agents[j].position.distance(agents[k].position) >= min_gap)
                    && agents[k].position.distance(vehicle.position) >= params.vehicle_radius + 1.0;
                if entry[k] <= f && clear {
                    active.push(k);
                    let track = &mut ds.pedestrians[base + k];
                    track.frames.push(frame0 + f);
                    track.positions.push(agents[k].position);
                } else {
                    entry[k] = entry[k].max(f + 1);
                    waiting.push(k);
                }
            }
            pending = waiting;
            vehicle_track.frames.push(frame0 + f);
            vehicle_track.positions.push(vehicle.position);
            if (active.is_empty() && pending.is_empty()) || f == params.max_frames as i64 {
                break;
            }
            let mut all: Vec<AgentState> = active.iter().map(|&k| agents[k].clone()).collect();
            all.push(vehicle.clone());
            let mut motions: Vec<Motion> = active
                .iter()
                .zip(&all)
                .map(|(&k, a)| {
                    Motion::Preferred(preferred_velocity(
                        a,
                        &Intention::Goal(goals[k]),
                        &params.porca,
                    ))
                })
                .collect();
            motions.push(Motion::Fixed);
            let next = advance(&all, &motions, &params.porca, dt, now).agents;
            now += dt;
            for (&k, a) in active.iter().zip(&next) {
                agents[k] = a.clone();
                let track = &mut ds.pedestrians[base + k];
                track.frames.push(frame0 + f + 1);
                track.positions.push(a.position);
            }
            vehicle = next[next.len() - 1].clone();
            active.retain(|&k| agents[k].position.distance(goals[k]) > params.porca.arrival_radius);
        }
        if params.noise > 0.0 {
            for track in &mut ds.pedestrians[base..] {
                for p in &mut track.positions {
                    *p += Vector2::new(noise.sample(&mut noise_rng), noise.sample(&mut noise_rng));
                }
            }
        }
    }
    ds.vehicle = Some(vehicle_track);
    Ok(ds)
}
