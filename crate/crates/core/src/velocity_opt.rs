//! New-velocity selection over an intersection of half-planes and a speed disc.
//!
//! Two objectives are supported: distance to the preferred velocity (solved by
//! incremental 2D linear programming with a circular constraint) and the
//! patience-weighted objective
//! `|v - v_pref|^2 + (1 / patience) * | |v|^2 - |v_pref|^2 |`, solved by
//! enumerating the finitely many points where its minimum can occur.

use thiserror::Error;

use crate::geom::{HalfPlane, Vector2, HALF_PLANE_EPSILON};

const LP_EPSILON: f64 = 1e-12;
/// Objective values closer than this are treated as ties.
pub const COST_TIE_EPSILON: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProgramError {
    #[error("half-plane intersection is empty within the speed disc")]
    Infeasible,
    #[error("invalid velocity program: {0}")]
    Invalid(String),
}

/// Constraints and preferences for one agent's velocity choice.
#[derive(Clone, Debug, PartialEq)]
pub struct VelocityProgram {
    pub half_planes: Vec<HalfPlane>,
    pub max_speed: f64,
    pub preferred: Vector2,
    /// In `(0, 1]`; only used by the patience objective.
    pub patience: f64,
    /// Current velocity, used to break ties between equally good candidates.
    pub current: Vector2,
}

impl VelocityProgram {
    pub fn new(half_planes: Vec<HalfPlane>, max_speed: f64, preferred: Vector2) -> Self {
        VelocityProgram {
            half_planes,
            max_speed,
            preferred,
            patience: 1.0,
            current: Vector2::ZERO,
        }
    }

    pub fn with_patience(mut self, patience: f64) -> Self {
        self.patience = patience;
        self
    }

    pub fn with_current(mut self, current: Vector2) -> Self {
        self.current = current;
        self
    }

    pub fn validate(&self) -> Result<(), ProgramError> {
        if !(self.max_speed > 0.0) || !self.max_speed.is_finite() {
            return Err(ProgramError::Invalid(format!(
                "max speed must be positive, was {}",
                self.max_speed
            )));
        }
        if !(self.patience > 0.0 && self.patience <= 1.0) {
            return Err(ProgramError::Invalid(format!(
                "patience must lie in (0, 1], was {}",
                self.patience
            )));
        }
        if !self.preferred.is_finite() || !self.current.is_finite() {
            return Err(ProgramError::Invalid("non-finite velocity".into()));
        }
        if self.preferred.length() > self.max_speed + 1e-9 {
            return Err(ProgramError::Invalid(format!(
                "preferred speed {} exceeds max speed {}",
                self.preferred.length(),
                self.max_speed
            )));
        }
        Ok(())
    }

    /// Whether `v` satisfies every half-plane and the speed limit.
    pub fn is_feasible(&self, v: Vector2) -> bool {
        v.length() <= self.max_speed + 1e-9 && self.half_planes.iter().all(|hp| hp.contains(v))
    }
}

/// Patience objective value at `v`.
pub fn patience_cost(v: Vector2, preferred: Vector2, patience: f64) -> f64 {
    (v - preferred).length_squared()
        + (v.length_squared() - preferred.length_squared()).abs() / patience
}

/// Closest feasible velocity to `prog.preferred`.
pub fn solve_linear_objective(prog: &VelocityProgram) -> Result<Vector2, ProgramError> {
    prog.validate()?;
    closest_feasible(&prog.half_planes, prog.max_speed, prog.preferred)
        .ok_or(ProgramError::Infeasible)
}

/// Minimiser of the patience objective over the feasible set.
pub fn solve_patience_objective(prog: &VelocityProgram) -> Result<Vector2, ProgramError> {
    prog.validate()?;
    let linear = closest_feasible(&prog.half_planes, prog.max_speed, prog.preferred)
        .ok_or(ProgramError::Infeasible)?;

    let pref = prog.preferred;
    let pref_sq = pref.length_squared();
    // If the closest point already keeps the preferred speed, the speed term is
    // zero there and no other point can beat it.
    if (linear.length_squared() - pref_sq).abs() <= 1e-12 * (1.0 + pref_sq) {
        return Ok(linear);
    }

    let k = 1.0 / prog.patience;
    let pref_speed = pref_sq.sqrt();
    let max_speed = prog.max_speed;

    let mut candidates =
        Vec::with_capacity(8 + prog.half_planes.len() * (prog.half_planes.len() + 5));
    candidates.push(linear);
    candidates.push(pref);
    candidates.push(Vector2::ZERO);
    candidates.push(pref / (1.0 + k));
    if let Some(dir) = pref.normalized() {
        candidates.push(dir * max_speed);
    }

    let planes = &prog.half_planes;
    for (i, hp) in planes.iter().enumerate() {
        let dir = hp.direction();
        let q = hp.point;
        // Outside the preferred-speed circle the objective along the line is a
        // convex quadratic; inside it is concave, so only its ends matter.
        let t = dir.dot(pref) / (1.0 + k) - q.dot(dir);
        candidates.push(q + dir * t);
        // Also the plain projection of the preferred velocity, which is the
        // minimiser along the line for patience 1 when the line stays inside.
        candidates.push(q + dir * (dir.dot(pref - q)));
        for radius in [pref_speed, max_speed] {
            if radius > 0.0 {
                line_circle(q, dir, radius, &mut candidates);
            }
        }
        for other in &planes[i + 1..] {
            if let Some(p) = line_line(hp, other) {
                candidates.push(p);
            }
        }
    }

    let mut best: Option<(f64, Vector2)> = None;
    for c in candidates {
        if !c.is_finite() || !prog.is_feasible(c) {
            continue;
        }
        let cost = patience_cost(c, pref, prog.patience);
        best = Some(match best {
            None => (cost, c),
            Some((bc, bv)) => {
                if cost < bc - COST_TIE_EPSILON {
                    (cost, c)
                } else if cost <= bc + COST_TIE_EPSILON && prefer_on_tie(c, bv, prog) {
                    (cost.min(bc), c)
                } else {
                    (bc, bv)
                }
            }
        });
    }
    Ok(best.map(|(_, v)| v).unwrap_or(linear))
}

// Tie-break: closer to the current velocity, then a left detour relative to
// the preferred direction.
fn prefer_on_tie(cand: Vector2, incumbent: Vector2, prog: &VelocityProgram) -> bool {
    let dc = cand.distance(prog.current);
    let di = incumbent.distance(prog.current);
    if dc < di - COST_TIE_EPSILON {
        return true;
    }
    if dc > di + COST_TIE_EPSILON {
        return false;
    }
    prog.preferred.cross(cand) > COST_TIE_EPSILON
        && prog.preferred.cross(incumbent) <= COST_TIE_EPSILON
}

fn line_circle(q: Vector2, dir: Vector2, radius: f64, out: &mut Vec<Vector2>) {
    let b = q.dot(dir);
    let disc = b * b - (q.length_squared() - radius * radius);
    if disc < 0.0 {
        return;
    }
    let s = disc.sqrt();
    for t in [-b - s, -b + s] {
        let p = q + dir * t;
        // Snap onto the circle to avoid rounding just outside the speed limit.
        let len = p.length();
        out.push(if len > 0.0 { p * (radius / len) } else { p });
    }
}

fn line_line(a: &HalfPlane, b: &HalfPlane) -> Option<Vector2> {
    let da = a.direction();
    let db = b.direction();
    let denom = da.cross(db);
    if denom.abs() <= LP_EPSILON {
        return None;
    }
    let t = db.cross(a.point - b.point) / denom;
    Some(a.point + da * t)
}

/// Incremental 2D linear program: the point of
/// `{|v| <= radius} ∩ planes` closest to `target`, or `None` when empty.
pub(crate) fn closest_feasible(
    planes: &[HalfPlane],
    radius: f64,
    target: Vector2,
) -> Option<Vector2> {
    let mut result = target.clamp_length(radius);
    for i in 0..planes.len() {
        if planes[i].signed_distance(result) < -LP_EPSILON {
            result = solve_on_line(planes, i, radius, target)?;
        }
    }
    Some(result)
}

// Optimise along the boundary of plane `line` subject to planes before it and
// the speed disc.
fn solve_on_line(
    planes: &[HalfPlane],
    line: usize,
    radius: f64,
    target: Vector2,
) -> Option<Vector2> {
    let hp = &planes[line];
    let dir = hp.direction();
    let dot = hp.point.dot(dir);
    let discriminant = dot * dot + radius * radius - hp.point.length_squared();
    if discriminant < 0.0 {
        return None;
    }
    let sqrt_disc = discriminant.sqrt();
    let mut t_left = -dot - sqrt_disc;
    let mut t_right = -dot + sqrt_disc;

    for other in &planes[..line] {
        let other_dir = other.direction();
        let denominator = dir.cross(other_dir);
        let numerator = other_dir.cross(hp.point - other.point);
        if denominator.abs() <= LP_EPSILON {
            // Parallel: either this line is entirely excluded or unaffected.
            if numerator < -LP_EPSILON {
                return None;
            }
            continue;
        }
        let t = numerator / denominator;
        if denominator > 0.0 {
            t_right = t_right.min(t);
        } else {
            t_left = t_left.max(t);
        }
        if t_left > t_right + LP_EPSILON {
            return None;
        }
    }

    let t = dir
        .dot(target - hp.point)
        .clamp(t_left, t_right.max(t_left));
    Some(hp.point + dir * t)
}

/// Result of the infeasible-program fallback.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LeastViolation {
    pub velocity: Vector2,
    /// Largest signed violation `max_i -(v - p_i) . n_i` at `velocity`.
    pub violation: f64,
}

/// Largest signed violation of `v` over `planes` (negative when strictly inside).
pub fn max_violation(planes: &[HalfPlane], v: Vector2) -> f64 {
    planes
        .iter()
        .map(|hp| -hp.signed_distance(v))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Velocity in the speed disc minimising the largest half-plane violation;
/// among minimisers, the slowest one.
pub fn fallback_least_violation(planes: &[HalfPlane], max_speed: f64) -> LeastViolation {
    if planes.is_empty() {
        return LeastViolation {
            velocity: Vector2::ZERO,
            violation: f64::NEG_INFINITY,
        };
    }
    // max_i f_i(v) >= max_i f_i(0) - max_speed on the disc, and v = 0 attains
    // max_i f_i(0), which brackets the optimal level.
    let mut hi = max_violation(planes, Vector2::ZERO);
    let mut lo = hi - max_speed;
    let feasible_at = |level: f64| {
        let relaxed: Vec<HalfPlane> = planes.iter().map(|hp| hp.relaxed(level)).collect();
        closest_feasible(&relaxed, max_speed, Vector2::ZERO)
    };
    for _ in 0..200 {
        if hi - lo <= 1e-13 * (1.0 + hi.abs()) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if feasible_at(mid).is_some() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let velocity = feasible_at(hi + HALF_PLANE_EPSILON * 0.1)
        .or_else(|| feasible_at(hi))
        .unwrap_or(Vector2::ZERO);
    LeastViolation {
        velocity,
        violation: max_violation(planes, velocity),
    }
}
