use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::path::Path;
use crate::geom::Vector2;

/// Speed command issued to the vehicle every step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Accelerate,
    Decelerate,
    Maintain,
}

impl Action {
    pub const ALL: [Action; 3] = [Action::Accelerate, Action::Decelerate, Action::Maintain];

    pub fn changes_speed(self) -> bool {
        !matches!(self, Action::Maintain)
    }

    pub fn index(self) -> usize {
        match self {
            Action::Accelerate => 0,
            Action::Decelerate => 1,
            Action::Maintain => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleParams {
    pub max_speed: f64,
    pub accel: f64,
    pub radius: f64,
    /// Extra distance pedestrians keep from the vehicle disc (m).
    pub clearance: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        VehicleParams {
            max_speed: 1.0,
            accel: 0.5,
            radius: 1.0,
            clearance: 0.2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub position: Vector2,
    pub heading: f64,
    pub speed: f64,
    /// Arc length travelled along the path.
    pub progress: f64,
}

impl VehicleState {
    pub fn at_start(path: &Path, speed: f64) -> Self {
        let (position, heading) = path.pose_at(0.0);
        VehicleState {
            position,
            heading,
            speed,
            progress: 0.0,
        }
    }

    pub fn velocity(&self) -> Vector2 {
        Vector2::from_angle(self.heading) * self.speed
    }
}

/// Commanded speed after `action`, before noise.
pub fn commanded_speed(speed: f64, action: Action, params: &VehicleParams, dt: f64) -> f64 {
    match action {
        Action::Accelerate => (speed + params.accel * dt).min(params.max_speed),
        Action::Decelerate => (speed - params.accel * dt).max(0.0),
        Action::Maintain => speed,
    }
}

/// Advances the vehicle along `path`. With `noise = Some((sigma, rng))` the new
/// speed is perturbed by Gaussian noise and clamped to the speed range.
///
/// Returns the new state and whether the end of the path was reached.
pub fn vehicle_transition<R: Rng + ?Sized>(
    veh: &VehicleState,
    action: Action,
    path: &Path,
    params: &VehicleParams,
    dt: f64,
    noise: Option<(f64, &mut R)>,
) -> (VehicleState, bool) {
    let mut speed = commanded_speed(veh.speed, action, params, dt);
    if let Some((sigma, rng)) = noise {
        if sigma > 0.0 {
            let z: f64 = rng.sample(StandardNormal);
            speed = (speed + sigma * z).clamp(0.0, params.max_speed);
        }
    }
    let progress = (veh.progress + speed * dt).min(path.length());
    let reached = veh.progress + speed * dt >= path.length();
    let (position, heading) = path.pose_at(progress);
    (
        VehicleState {
            position,
            heading,
            speed,
            progress,
        },
        reached,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::mock::StepRng;

    fn line() -> Path {
        Path::straight(Vector2::ZERO, Vector2::new(16.0, 0.0)).unwrap()
    }

    fn step(speed: f64, action: Action) -> VehicleState {
        let path = line();
        let veh = VehicleState::at_start(&path, speed);
        vehicle_transition::<StepRng>(
            &veh,
            action,
            &path,
            &VehicleParams::default(),
            1.0 / 3.0,
            None,
        )
        .0
    }

    #[test]
    fn speed_updates_and_clamps() {
        assert!((step(0.5, Action::Accelerate).speed - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(step(0.1, Action::Decelerate).speed, 0.0);
        assert_eq!(step(1.0, Action::Accelerate).speed, 1.0);
        assert_eq!(step(0.4, Action::Maintain).speed, 0.4);
    }

    #[test]
    fn progress_and_goal_flag() {
        let path = line();
        let mut veh = VehicleState::at_start(&path, 1.0);
        veh.progress = 15.8;
        let (next, reached) = vehicle_transition::<StepRng>(
            &veh,
            Action::Maintain,
            &path,
            &VehicleParams::default(),
            1.0 / 3.0,
            None,
        );
        assert!(reached);
        assert_eq!(next.progress, 16.0);
        assert_eq!(next.position, Vector2::new(16.0, 0.0));
    }
}
