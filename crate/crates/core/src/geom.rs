//! Velocity-space geometry: 2D vectors, truncated velocity-obstacle cones and
//! half-planes.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance used by [`HalfPlane::contains`].
pub const HALF_PLANE_EPSILON: f64 = 1e-9;

/// A 2D position (m) or velocity (m/s).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vector2 {
    pub x: f64,
    pub y: f64,
}

impl Vector2 {
    pub const ZERO: Vector2 = Vector2 { x: 0.0, y: 0.0 };

    #[inline]
    pub fn new(x: f64, y: f64) -> Self {
        debug_assert!(
            x.is_finite() && y.is_finite(),
            "non-finite Vector2 ({x}, {y})"
        );
        Vector2 { x, y }
    }

    /// Builds a vector, rejecting NaN or infinite components.
    pub fn try_new(x: f64, y: f64) -> Result<Self, GeomError> {
        if x.is_finite() && y.is_finite() {
            Ok(Vector2 { x, y })
        } else {
            Err(GeomError::NonFinite)
        }
    }

    #[inline]
    pub fn from_angle(angle: f64) -> Self {
        Vector2::new(angle.cos(), angle.sin())
    }

    #[inline]
    pub fn dot(self, other: Vector2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// The z component of the 3D cross product (2D determinant).
    #[inline]
    pub fn cross(self, other: Vector2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    #[inline]
    pub fn length_squared(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn length(self) -> f64 {
        self.length_squared().sqrt()
    }

    #[inline]
    pub fn distance(self, other: Vector2) -> f64 {
        (self - other).length()
    }

    /// Unit vector in the same direction, or `None` for a (near) zero vector.
    #[inline]
    pub fn normalized(self) -> Option<Vector2> {
        let len = self.length();
        if len > 1e-12 {
            Some(self / len)
        } else {
            None
        }
    }

    /// Counter-clockwise perpendicular.
    #[inline]
    pub fn perp_left(self) -> Vector2 {
        Vector2::new(-self.y, self.x)
    }

    /// Clockwise perpendicular.
    #[inline]
    pub fn perp_right(self) -> Vector2 {
        Vector2::new(self.y, -self.x)
    }

    #[inline]
    pub fn rotated(self, cos: f64, sin: f64) -> Vector2 {
        Vector2::new(self.x * cos - self.y * sin, self.x * sin + self.y * cos)
    }

    /// Scales the vector down so its length does not exceed `max_len`.
    pub fn clamp_length(self, max_len: f64) -> Vector2 {
        let len_sq = self.length_squared();
        if len_sq > max_len * max_len {
            self * (max_len / len_sq.sqrt())
        } else {
            self
        }
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for Vector2 {
    fn from(v: [f64; 2]) -> Self {
        Vector2 { x: v[0], y: v[1] }
    }
}

impl From<Vector2> for [f64; 2] {
    fn from(v: Vector2) -> Self {
        [v.x, v.y]
    }
}

impl fmt::Display for Vector2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl Add for Vector2 {
    type Output = Vector2;
    #[inline]
    fn add(self, rhs: Vector2) -> Vector2 {
        Vector2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for Vector2 {
    #[inline]
    fn add_assign(&mut self, rhs: Vector2) {
        *self = *self + rhs;
    }
}

impl Sub for Vector2 {
    type Output = Vector2;
    #[inline]
    fn sub(self, rhs: Vector2) -> Vector2 {
        Vector2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl SubAssign for Vector2 {
    #[inline]
    fn sub_assign(&mut self, rhs: Vector2) {
        *self = *self - rhs;
    }
}

impl Mul<f64> for Vector2 {
    type Output = Vector2;
    #[inline]
    fn mul(self, rhs: f64) -> Vector2 {
        Vector2::new(self.x * rhs, self.y * rhs)
    }
}

impl Mul<Vector2> for f64 {
    type Output = Vector2;
    #[inline]
    fn mul(self, rhs: Vector2) -> Vector2 {
        rhs * self
    }
}

impl Div<f64> for Vector2 {
    type Output = Vector2;
    #[inline]
    fn div(self, rhs: f64) -> Vector2 {
        Vector2::new(self.x / rhs, self.y / rhs)
    }
}

impl Neg for Vector2 {
    type Output = Vector2;
    #[inline]
    fn neg(self) -> Vector2 {
        Vector2::new(-self.x, -self.y)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("vector has a non-finite component")]
    NonFinite,
    #[error("combined radius must be positive, was {0}")]
    NonPositiveRadius(f64),
    #[error("time window must be positive, was {0}")]
    NonPositiveTau(f64),
    /// The two discs already overlap, so no truncated cone exists.
    #[error("discs overlap: center distance {distance} <= combined radius {combined_radius}")]
    Overlapping { distance: f64, combined_radius: f64 },
    #[error("half-plane normal has zero length")]
    ZeroNormal,
}

/// The truncated velocity obstacle induced on agent A by agent B.
///
/// `center` is `p_B - p_A`. A relative velocity `v` lies in the obstacle when
/// the ray `t * v`, `t` in `(0, tau]`, reaches the disc of radius
/// `combined_radius` around `center`. In velocity space this is a cone with
/// apex at the origin whose legs are tangent to the cutoff disc
/// `(center / tau, combined_radius / tau)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VoCone {
    center: Vector2,
    combined_radius: f64,
    tau: f64,
}

/// Closest point on a cone boundary together with the outward unit normal there.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryPoint {
    pub point: Vector2,
    pub normal: Vector2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryPiece {
    LeftLeg,
    RightLeg,
    CutoffArc,
}

impl VoCone {
    pub fn new(center: Vector2, combined_radius: f64, tau: f64) -> Result<Self, GeomError> {
        if !center.is_finite() {
            return Err(GeomError::NonFinite);
        }
        if !(combined_radius > 0.0) || !combined_radius.is_finite() {
            return Err(GeomError::NonPositiveRadius(combined_radius));
        }
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(GeomError::NonPositiveTau(tau));
        }
        let distance = center.length();
        if distance <= combined_radius {
            return Err(GeomError::Overlapping {
                distance,
                combined_radius,
            });
        }
        Ok(VoCone {
            center,
            combined_radius,
            tau,
        })
    }

    pub fn center(&self) -> Vector2 {
        self.center
    }

    pub fn combined_radius(&self) -> f64 {
        self.combined_radius
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Half-angle between the cone axis and either leg.
    pub fn leg_half_angle(&self) -> f64 {
        (self.combined_radius / self.center.length()).asin()
    }

    pub fn cutoff_center(&self) -> Vector2 {
        self.center / self.tau
    }

    pub fn cutoff_radius(&self) -> f64 {
        self.combined_radius / self.tau
    }

    /// Whether relative velocity `v` leads to contact within `(0, tau]`.
    pub fn contains(&self, v: Vector2) -> bool {
        let speed_sq = v.length_squared();
        if speed_sq == 0.0 {
            return false;
        }
        let t = (v.dot(self.center) / speed_sq).clamp(0.0, self.tau);
        (v * t - self.center).length_squared() <= self.combined_radius * self.combined_radius
    }

    /// Leg directions `(left, right)` as unit vectors; left is counter-clockwise
    /// from the axis.
    pub fn leg_directions(&self) -> (Vector2, Vector2) {
        let dist_sq = self.center.length_squared();
        let dist = dist_sq.sqrt();
        let axis = self.center / dist;
        let sin = self.combined_radius / dist;
        let cos = (dist_sq - self.combined_radius * self.combined_radius).sqrt() / dist;
        (axis.rotated(cos, sin), axis.rotated(cos, -sin))
    }

    /// Point of the cone boundary closest to `v` and the outward normal there.
    ///
    /// The boundary is split into the two leg rays (starting where they touch
    /// the cutoff circle) and the cutoff arc facing the apex. Each piece is
    /// minimised in closed form. When two pieces are equally close the one
    /// whose correction `point - v` turns left of the cone axis wins.
    pub fn closest_boundary(&self, v: Vector2) -> BoundaryPoint {
        self.closest_boundary_piece(v).0
    }

    pub fn closest_boundary_piece(&self, v: Vector2) -> (BoundaryPoint, BoundaryPiece) {
        let dist_sq = self.center.length_squared();
        let dist = dist_sq.sqrt();
        let axis = self.center / dist;
        let r = self.combined_radius;
        let sin = r / dist;
        let leg_len = (dist_sq - r * r).sqrt();
        let cos = leg_len / dist;
        let left = axis.rotated(cos, sin);
        let right = axis.rotated(cos, -sin);
        let tangent_dist = leg_len / self.tau;

        let mut best: Option<(f64, BoundaryPoint, BoundaryPiece)> = None;
        let mut consider = |point: Vector2, normal: Vector2, piece: BoundaryPiece| {
            let d = (point - v).length_squared();
            let cand = BoundaryPoint { point, normal };
            match &best {
                None => best = Some((d, cand, piece)),
                Some((bd, bp, _)) => {
                    let tol = 1e-12 * (1.0 + bd.max(d));
                    if d < bd - tol {
                        best = Some((d, cand, piece));
                    } else if (d - bd).abs() <= tol {
                        // Equidistant pieces: keep the left-turning correction.
                        let current_left = axis.cross(bp.point - v) >= 0.0;
                        let cand_left = axis.cross(point - v) >= 0.0;
                        if cand_left && !current_left {
                            best = Some((d, cand, piece));
                        }
                    }
                }
            }
        };

        let s_left = v.dot(left).max(tangent_dist);
        consider(left * s_left, left.perp_left(), BoundaryPiece::LeftLeg);
        let s_right = v.dot(right).max(tangent_dist);
        consider(right * s_right, right.perp_right(), BoundaryPiece::RightLeg);

        let cutoff_center = self.center / self.tau;
        let cutoff_radius = r / self.tau;
        let w = v - cutoff_center;
        let w_len = w.length();
        let w_dir = if w_len > 1e-15 { w / w_len } else { -axis };
        // The apex-facing arc spans directions whose axial component is at most
        // -sin; outside that range its nearest point is a tangency point, which
        // the leg candidates already cover.
        if w_dir.dot(axis) <= -sin {
            consider(
                cutoff_center + w_dir * cutoff_radius,
                w_dir,
                BoundaryPiece::CutoffArc,
            );
        }

        let (_, point, piece) = best.expect("at least one leg candidate");
        (point, piece)
    }

    /// The smallest change `u` that moves `v` onto the cone boundary.
    pub fn boundary_correction(&self, v: Vector2) -> (Vector2, Vector2) {
        let bp = self.closest_boundary(v);
        (bp.point - v, bp.normal)
    }
}

/// Permitted velocities `{v : (v - point) . normal >= 0}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfPlane {
    pub point: Vector2,
    pub normal: Vector2,
}

impl HalfPlane {
    /// Builds a half-plane, normalising `normal`.
    pub fn new(point: Vector2, normal: Vector2) -> Result<Self, GeomError> {
        if !point.is_finite() || !normal.is_finite() {
            return Err(GeomError::NonFinite);
        }
        let normal = normal.normalized().ok_or(GeomError::ZeroNormal)?;
        Ok(HalfPlane { point, normal })
    }

    /// Signed distance of `v` from the boundary line; positive inside.
    #[inline]
    pub fn signed_distance(&self, v: Vector2) -> f64 {
        (v - self.point).dot(self.normal)
    }

    #[inline]
    pub fn contains(&self, v: Vector2) -> bool {
        self.signed_distance(v) >= -HALF_PLANE_EPSILON
    }

    /// Direction of the boundary line with the permitted side on its left.
    #[inline]
    pub fn direction(&self) -> Vector2 {
        self.normal.perp_right()
    }

    /// Same half-plane with the boundary moved `offset` against the normal.
    pub fn relaxed(&self, offset: f64) -> HalfPlane {
        HalfPlane {
            point: self.point - self.normal * offset,
            normal: self.normal,
        }
    }
}

/// Closest approach distance between two discs' centers over `[0, horizon]`
/// when moving with constant relative velocity.
pub fn closest_approach(
    relative_position: Vector2,
    relative_velocity: Vector2,
    horizon: f64,
) -> f64 {
    let speed_sq = relative_velocity.length_squared();
    let t = if speed_sq > 0.0 {
        (-relative_position.dot(relative_velocity) / speed_sq).clamp(0.0, horizon)
    } else {
        0.0
    };
    (relative_position + relative_velocity * t).length()
}
