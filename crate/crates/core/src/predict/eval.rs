use std::collections::BTreeSet;

use super::dataset::{Track, TrajectoryDataset};
use super::models::{predict_scene, PredictionModel, Scene, SceneAgent};
use super::PredictError;
use crate::geom::Vector2;
use crate::porca::{AgentState, PorcaParams};
use crate::sim::{PedestrianParams, VEHICLE_ID};

#[derive(Clone, Debug, PartialEq)]
pub struct EvalConfig {
    /// Prediction horizon (s).
    pub horizon: f64,
    /// A window succeeds when its mean displacement is below this (m).
    pub threshold: f64,
    pub porca: PorcaParams,
    pub pedestrian: PedestrianParams,
    pub vehicle_radius: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            horizon: 3.0,
            threshold: 0.4,
            porca: PorcaParams::default(),
            pedestrian: PedestrianParams::default(),
            vehicle_radius: 1.0,
        }
    }
}

/// Number of frames covering `horizon`, allowing a tenth of a frame of slack.
pub fn horizon_frames(horizon: f64, frame_interval: f64) -> Result<usize, PredictError> {
    let ratio = horizon / frame_interval;
    let frames = ratio.round();
    if !ratio.is_finite() || frames < 1.0 || (ratio - frames).abs() > 0.1 {
        return Err(PredictError::Horizon {
            horizon,
            interval: frame_interval,
        });
    }
    Ok(frames as usize)
}

pub fn mean_displacement(predicted: &[Vector2], truth: &[Vector2]) -> Result<f64, PredictError> {
    if predicted.len() != truth.len() || truth.is_empty() {
        return Err(PredictError::LengthMismatch {
            predicted: predicted.len(),
            truth: truth.len(),
        });
    }
    Ok(predicted
        .iter()
        .zip(truth)
        .map(|(p, t)| p.distance(*t))
        .sum::<f64>()
        / truth.len() as f64)
}

/// Fraction of windows whose mean displacement is strictly below `threshold`.
pub fn success_rate(
    predicted: &[Vec<Vector2>],
    truth: &[Vec<Vector2>],
    threshold: f64,
) -> Result<f64, PredictError> {
    if predicted.len() != truth.len() {
        return Err(PredictError::LengthMismatch {
            predicted: predicted.len(),
            truth: truth.len(),
        });
    }
    if truth.is_empty() {
        return Ok(f64::NAN);
    }
    let mut hits = 0usize;
    for (p, t) in predicted.iter().zip(truth) {
        if mean_displacement(p, t)? < threshold {
            hits += 1;
        }
    }
    Ok(hits as f64 / truth.len() as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelScore {
    pub model: PredictionModel,
    pub windows: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Trajectories with at least one evaluated window.
    pub trajectories: usize,
    /// Trajectories whose window errors average below the threshold.
    pub trajectory_successes: usize,
    pub trajectory_success_rate: f64,
    /// Windows left out because the pedestrian's goal is unknown.
    pub skipped: usize,
}

impl ModelScore {
    pub const CSV_HEADER: &'static str = "model,windows,successes,success_rate";
    pub const TRAJECTORY_CSV_HEADER: &'static str = "model,trajectories,successes,success_rate";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{}",
            self.model,
            self.windows,
            self.successes,
            rate(self.success_rate)
        )
    }

    pub fn trajectory_csv_row(&self) -> String {
        format!(
            "{},{},{},{}",
            self.model,
            self.trajectories,
            self.trajectory_successes,
            rate(self.trajectory_success_rate)
        )
    }
}

fn rate(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:.4}")
    }
}

fn velocity_at(track: &Track, idx: usize, dt: f64) -> Vector2 {
    if idx > 0 && track.frames[idx - 1] + 1 == track.frames[idx] {
        (track.positions[idx] - track.positions[idx - 1]) / dt
    } else {
        Vector2::ZERO
    }
}

/// Patience implied by the run of slow steps that ends at `idx`.
fn patience_from_history(
    track: &Track,
    idx: usize,
    goal: Option<Vector2>,
    dt: f64,
    cfg: &EvalConfig,
) -> (f64, Option<f64>) {
    let Some(goal) = goal else {
        return (1.0, None);
    };
    let p = &cfg.porca;
    let pref = cfg.pedestrian.pref_speed.min(cfg.pedestrian.max_speed);
    let mut j = idx;
    let mut run = 0usize;
    while j > 0 && track.frames[j - 1] + 1 == track.frames[j] {
        let from = track.positions[j - 1];
        let dist = from.distance(goal);
        let pref_mag = if dist <= p.arrival_radius || dist == 0.0 {
            0.0
        } else {
            pref
        };
        let speed = track.positions[j].distance(from) / dt;
        if pref_mag <= 0.0 || speed > p.sigma_fraction * pref_mag {
            break;
        }
        run += 1;
        j -= 1;
    }
    if run == 0 {
        return (1.0, None);
    }
    let elapsed = run as f64 * dt;
    (
        (-p.decay_rate * elapsed).exp().max(p.rho_min).min(1.0),
        Some(-elapsed),
    )
}

/// Everything recorded at `frame`, with velocities from backward differences.
pub fn scene_at(dataset: &TrajectoryDataset, frame: i64, cfg: &EvalConfig) -> (Scene, Vec<usize>) {
    let dt = dataset.frame_interval;
    let mut scene = Scene::default();
    let mut tracks = Vec::new();
    for (i, track) in dataset.pedestrians.iter().enumerate() {
        let Some(idx) = track.index_of(frame) else {
            continue;
        };
        let goal = dataset.goals.get(&track.id).copied();
        let mut agent =
            AgentState::pedestrian(i as u32, track.positions[idx], velocity_at(track, idx, dt))
                .with_radius(cfg.pedestrian.radius)
                .with_speeds(cfg.pedestrian.pref_speed, cfg.pedestrian.max_speed);
        let (patience, since) = patience_from_history(track, idx, goal, dt, cfg);
        agent.patience = patience;
        agent.low_speed_since = since;
        scene.pedestrians.push(SceneAgent { agent, goal });
        tracks.push(i);
    }
    if let Some(v) = &dataset.vehicle {
        if let Some(idx) = v.index_of(frame) {
            let vel = velocity_at(v, idx, dt);
            scene.vehicle = Some(AgentState::vehicle(
                VEHICLE_ID,
                v.positions[idx],
                vel,
                cfg.vehicle_radius,
                vel.length().max(1.0),
            ));
        }
    }
    (scene, tracks)
}

/// Scores every model on every sliding window: a pedestrian observed at the
/// previous, current and all of the next `horizon` frames.
pub fn evaluate(
    dataset: &TrajectoryDataset,
    models: &[PredictionModel],
    cfg: &EvalConfig,
) -> Result<Vec<ModelScore>, PredictError> {
    if !(cfg.threshold > 0.0) {
        return Err(PredictError::Invalid(format!(
            "threshold must be positive, got {}",
            cfg.threshold
        )));
    }
    let dt = dataset.frame_interval;
    let h = horizon_frames(cfg.horizon, dt)?;
    let frames: BTreeSet<i64> = dataset
        .pedestrians
        .iter()
        .flat_map(|t| t.frames.iter().copied())
        .collect();
    let n_tracks = dataset.pedestrians.len();
    // Per model: window counts, then per track (error sum, windows).
    let mut counts = vec![(0usize, 0usize, 0usize); models.len()];
    let mut per_track = vec![vec![(0.0f64, 0usize); n_tracks]; models.len()];

    for &frame in &frames {
        let eligible: Vec<bool> = dataset
            .pedestrians
            .iter()
            .map(|t| match t.index_of(frame) {
                Some(idx) => {
                    idx > 0
                        && t.frames[idx - 1] + 1 == frame
                        && idx + h < t.len()
                        && t.frames[idx + h] == frame + h as i64
                }
                None => false,
            })
            .collect();
        if !eligible.iter().any(|&e| e) {
            continue;
        }
        let (scene, tracks) = scene_at(dataset, frame, cfg);
        for (m, &model) in models.iter().enumerate() {
            let predictions = predict_scene(model, &scene, h, dt, &cfg.porca);
            for (k, &ti) in tracks.iter().enumerate() {
                if !eligible[ti] {
                    continue;
                }
                let Some(pred) = &predictions[k] else {
                    counts[m].2 += 1;
                    continue;
                };
                let track = &dataset.pedestrians[ti];
                let idx = track.index_of(frame).unwrap();
                let err = mean_displacement(pred, &track.positions[idx + 1..=idx + h])?;
                counts[m].0 += 1;
                counts[m].1 += (err < cfg.threshold) as usize;
                per_track[m][ti].0 += err;
                per_track[m][ti].1 += 1;
            }
        }
    }

    let ratio = |num: usize, den: usize| {
        if den == 0 {
            f64::NAN
        } else {
            num as f64 / den as f64
        }
    };
    Ok(models
        .iter()
        .enumerate()
        .map(|(m, &model)| {
            let evaluated: Vec<f64> = per_track[m]
                .iter()
                .filter(|(_, n)| *n > 0)
                .map(|(sum, n)| sum / *n as f64)
                .collect();
            let traj_hits = evaluated.iter().filter(|&&e| e < cfg.threshold).count();
            let (windows, successes, skipped) = counts[m];
            ModelScore {
                model,
                windows,
                successes,
                success_rate: ratio(successes, windows),
                trajectories: evaluated.len(),
                trajectory_successes: traj_hits,
                trajectory_success_rate: ratio(traj_hits, evaluated.len()),
                skipped,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horizon_rounding() {
        assert_eq!(horizon_frames(3.0, 0.33).unwrap(), 9);
        assert_eq!(horizon_frames(3.0, 1.0 / 3.0).unwrap(), 9);
        assert_eq!(
            horizon_frames(3.0, 0.4).unwrap_err().to_string(),
            "horizon 3 s is not a whole number of 0.4 s frames"
        );
        assert!(horizon_frames(0.01, 0.33).is_err());
    }

    #[test]
    fn displacement_examples() {
        let truth = vec![Vector2::new(1.0, 0.0), Vector2::new(2.0, 0.0)];
        let pred = vec![Vector2::new(1.0, 0.3), Vector2::new(2.0, 0.5)];
        assert!((mean_displacement(&pred, &truth).unwrap() - 0.4).abs() < 1e-12);
        assert!(matches!(
            mean_displacement(&pred[..1], &truth),
            Err(PredictError::LengthMismatch {
                predicted: 1,
                truth: 2
            })
        ));
        let exact = vec![Vector2::new(1.0, 0.39), Vector2::new(2.0, 0.39)];
        let rate = success_rate(&[pred, exact], &[truth.clone(), truth], 0.4).unwrap();
        assert_eq!(rate, 0.5);
    }

    #[test]
    fn straight_walker_is_predicted_by_every_model() {
        let mut ds = TrajectoryDataset::new(1.0 / 3.0);
        let mut t = Track::new("a");
        for f in 0..20 {
            t.frames.push(f);
            t.positions.push(Vector2::new(0.4 * f as f64, 0.0));
        }
        ds.pedestrians.push(t);
        ds.goals.insert("a".into(), Vector2::new(30.0, 0.0));
        let scores = evaluate(&ds, &PredictionModel::ALL, &EvalConfig::default()).unwrap();
        for s in scores {
            assert_eq!(s.windows, 10, "{}", s.model);
            assert_eq!(s.success_rate, 1.0, "{}", s.model);
            assert_eq!(s.trajectories, 1);
        }
    }
}
