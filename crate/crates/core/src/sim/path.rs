use serde::{Deserialize, Serialize};

use super::SimError;
use crate::geom::Vector2;

/// A polyline parameterised by arc length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vector2>", into = "Vec<Vector2>")]
pub struct Path {
    waypoints: Vec<Vector2>,
    cumulative: Vec<f64>,
}

impl Path {
    pub fn new(waypoints: Vec<Vector2>) -> Result<Self, SimError> {
        if waypoints.len() < 2 {
            return Err(SimError::InvalidPath("needs at least two waypoints".into()));
        }
        if let Some(p) = waypoints.iter().find(|p| !p.is_finite()) {
            return Err(SimError::InvalidPath(format!("non-finite waypoint {p}")));
        }
        let mut cumulative = Vec::with_capacity(waypoints.len());
        cumulative.push(0.0);
        for (i, pair) in waypoints.windows(2).enumerate() {
            let len = pair[0].distance(pair[1]);
            if len <= 1e-9 {
                return Err(SimError::InvalidPath(format!(
                    "waypoints {i} and {} coincide",
                    i + 1
                )));
            }
            cumulative.push(cumulative[i] + len);
        }
        Ok(Path {
            waypoints,
            cumulative,
        })
    }

    pub fn straight(from: Vector2, to: Vector2) -> Result<Self, SimError> {
        Path::new(vec![from, to])
    }

    pub fn waypoints(&self) -> &[Vector2] {
        &self.waypoints
    }

    pub fn length(&self) -> f64 {
        *self.cumulative.last().expect("non-empty")
    }

    fn segment(&self, s: f64) -> usize {
        let idx = self.cumulative.partition_point(|&c| c <= s);
        idx.clamp(1, self.waypoints.len() - 1) - 1
    }

    /// Position and heading at arc length `s`, clamped to the path.
    pub fn pose_at(&self, s: f64) -> (Vector2, f64) {
        let s = s.clamp(0.0, self.length());
        let i = self.segment(s);
        let (a, b) = (self.waypoints[i], self.waypoints[i + 1]);
        let seg_len = self.cumulative[i + 1] - self.cumulative[i];
        let t = (s - self.cumulative[i]) / seg_len;
        (a + (b - a) * t, (b - a).angle())
    }

    /// Arc length of the closest path point and the signed lateral offset
    /// (positive to the left of travel).
    pub fn project(&self, p: Vector2) -> (f64, f64) {
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for i in 0..self.waypoints.len() - 1 {
            let (a, b) = (self.waypoints[i], self.waypoints[i + 1]);
            let seg = b - a;
            let seg_len = self.cumulative[i + 1] - self.cumulative[i];
            let t = ((p - a).dot(seg) / (seg_len * seg_len)).clamp(0.0, 1.0);
            let foot = a + seg * t;
            let d2 = (p - foot).length_squared();
            if d2 < best.0 {
                let lateral = seg.cross(p - a) / seg_len;
                best = (d2, self.cumulative[i] + t * seg_len, lateral);
            }
        }
        (best.1, best.2)
    }
}

impl TryFrom<Vec<Vector2>> for Path {
    type Error = SimError;

    fn try_from(waypoints: Vec<Vector2>) -> Result<Self, SimError> {
        Path::new(waypoints)
    }
}

impl From<Path> for Vec<Vector2> {
    fn from(path: Path) -> Self {
        path.waypoints
    }
}
