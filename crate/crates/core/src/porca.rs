//! The pedestrian ORCA model: preferred velocities, patience, distance-based
//! responsibility sharing and one synchronous step for a set of agents.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{GeomError, HalfPlane, Vector2, VoCone};
use crate::velocity_opt::{
    fallback_least_violation, solve_linear_objective, solve_patience_objective, VelocityProgram,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Pedestrian,
    Vehicle,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub id: u32,
    pub position: Vector2,
    pub velocity: Vector2,
    pub radius: f64,
    pub pref_speed: f64,
    pub max_speed: f64,
    pub patience: f64,
    /// Start of the current run of sub-threshold speeds, if any.
    pub low_speed_since: Option<f64>,
    pub kind: AgentKind,
}

impl AgentState {
    pub fn pedestrian(id: u32, position: Vector2, velocity: Vector2) -> Self {
        AgentState {
            id,
            position,
            velocity,
            radius: 0.25,
            pref_speed: 1.2,
            max_speed: 1.5,
            patience: 1.0,
            low_speed_since: None,
            kind: AgentKind::Pedestrian,
        }
    }

    pub fn vehicle(
        id: u32,
        position: Vector2,
        velocity: Vector2,
        radius: f64,
        max_speed: f64,
    ) -> Self {
        AgentState {
            id,
            position,
            velocity,
            radius,
            pref_speed: max_speed,
            max_speed,
            patience: 1.0,
            low_speed_since: None,
            kind: AgentKind::Vehicle,
        }
    }

    pub fn with_radius(mut self, radius: f64) -> Self {
        self.radius = radius;
        self
    }

    pub fn with_speeds(mut self, pref_speed: f64, max_speed: f64) -> Self {
        self.pref_speed = pref_speed;
        self.max_speed = max_speed;
        self
    }
}

/// A pedestrian's hidden navigation intention.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Intention {
    Goal(Vector2),
    Stop,
}

/// Which objective an agent optimises when choosing its new velocity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Closest to the preferred velocity.
    Linear,
    /// Closest to the preferred velocity plus a patience-weighted speed penalty.
    Patience,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VOptMode {
    Current,
    Preferred,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PorcaParams {
    /// Time window of the velocity obstacles (s).
    pub tau: f64,
    /// Low-speed threshold as a fraction of the preferred speed.
    pub sigma_fraction: f64,
    pub rho_min: f64,
    /// Patience decay rate (1/s).
    pub decay_rate: f64,
    /// Gap below which pedestrians take more responsibility near a vehicle (m).
    pub resp_distance: f64,
    /// Pedestrian share at contact.
    pub resp_max: f64,
    pub neighbor_radius: f64,
    pub max_neighbors: usize,
    pub v_opt_mode: VOptMode,
    pub arrival_radius: f64,
    /// Objective used by pedestrians; vehicles always use [`Objective::Linear`].
    pub objective: Objective,
    /// When false every pair splits responsibility evenly.
    pub responsibility_schedule: bool,
}

impl Default for PorcaParams {
    fn default() -> Self {
        PorcaParams {
            tau: 2.0,
            sigma_fraction: 0.2,
            rho_min: 0.1,
            decay_rate: 1.0,
            resp_distance: 1.5,
            resp_max: 0.95,
            neighbor_radius: 5.0,
            max_neighbors: 10,
            v_opt_mode: VOptMode::Current,
            arrival_radius: 0.3,
            objective: Objective::Patience,
            responsibility_schedule: true,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("parameter `{name}` = {value} outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
}

impl PorcaParams {
    /// Plain ORCA: linear objective, even responsibility, no patience.
    pub fn orca() -> Self {
        PorcaParams {
            objective: Objective::Linear,
            responsibility_schedule: false,
            ..PorcaParams::default()
        }
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        fn check(
            name: &'static str,
            value: f64,
            ok: bool,
            range: &'static str,
        ) -> Result<(), ParamError> {
            if ok && value.is_finite() {
                Ok(())
            } else {
                Err(ParamError::OutOfRange { name, value, range })
            }
        }
        check("tau", self.tau, self.tau > 0.0, "(0, inf)")?;
        check(
            "sigma_fraction",
            self.sigma_fraction,
            self.sigma_fraction > 0.0 && self.sigma_fraction < 0.3,
            "(0, 0.3)",
        )?;
        check(
            "rho_min",
            self.rho_min,
            self.rho_min > 0.05 && self.rho_min < 0.15,
            "(0.05, 0.15)",
        )?;
        check(
            "decay_rate",
            self.decay_rate,
            self.decay_rate > 0.0,
            "(0, inf)",
        )?;
        check(
            "resp_distance",
            self.resp_distance,
            self.resp_distance > 0.0,
            "(0, inf)",
        )?;
        check(
            "resp_max",
            self.resp_max,
            self.resp_max > 0.5 && self.resp_max < 1.0,
            "(0.5, 1)",
        )?;
        check(
            "neighbor_radius",
            self.neighbor_radius,
            self.neighbor_radius > 0.0,
            "(0, inf)",
        )?;
        check(
            "arrival_radius",
            self.arrival_radius,
            self.arrival_radius >= 0.0,
            "[0, inf)",
        )?;
        Ok(())
    }
}

/// Goal-directed velocity at the agent's preferred speed; zero for a stop
/// intention or once within the arrival radius.
pub fn preferred_velocity(
    agent: &AgentState,
    intention: &Intention,
    params: &PorcaParams,
) -> Vector2 {
    match intention {
        Intention::Stop => Vector2::ZERO,
        Intention::Goal(goal) => {
            let to_goal = *goal - agent.position;
            let dist = to_goal.length();
            if dist <= params.arrival_radius || dist == 0.0 {
                Vector2::ZERO
            } else {
                to_goal * (agent.pref_speed.min(agent.max_speed) / dist)
            }
        }
    }
}

/// Pedestrian share of the avoidance effort for a pedestrian–vehicle pair at
/// surface gap `gap`.
pub fn responsibility(gap: f64, params: &PorcaParams) -> f64 {
    let gap = gap.max(0.0);
    if gap >= params.resp_distance {
        0.5
    } else {
        params.resp_max - (params.resp_max - 0.5) * gap / params.resp_distance
    }
}

/// Share of the avoidance effort agent `a` takes against `b`.
pub fn pair_share(a: &AgentState, b: &AgentState, params: &PorcaParams) -> f64 {
    if !params.responsibility_schedule || a.kind == b.kind {
        return 0.5;
    }
    let gap = a.position.distance(b.position) - (a.radius + b.radius);
    let ped_share = responsibility(gap, params);
    match a.kind {
        AgentKind::Pedestrian => ped_share,
        AgentKind::Vehicle => 1.0 - ped_share,
    }
}

/// The permitted half-plane for `a` against `b` when `a` absorbs `share` of
/// the smallest relative-velocity correction.
///
/// Overlapping discs have no truncated cone; they get a half-plane that pushes
/// `a` away along the center line fast enough to separate within `dt`.
pub fn orca_halfplane(
    a: &AgentState,
    b: &AgentState,
    v_opt_a: Vector2,
    v_opt_b: Vector2,
    tau: f64,
    share: f64,
    dt: f64,
) -> HalfPlane {
    let rel_pos = b.position - a.position;
    let rel_vel = v_opt_a - v_opt_b;
    let combined = a.radius + b.radius;
    match VoCone::new(rel_pos, combined, tau) {
        Ok(cone) => {
            let bp = cone.closest_boundary(rel_vel);
            let u = bp.point - rel_vel;
            HalfPlane {
                point: v_opt_a + u * share,
                normal: bp.normal,
            }
        }
        Err(GeomError::Overlapping { distance, .. }) => {
            let away = if distance > 1e-9 {
                -rel_pos / distance
            } else if a.id < b.id {
                Vector2::new(-1.0, 0.0)
            } else {
                Vector2::new(1.0, 0.0)
            };
            let required = (combined - distance) / dt;
            let u = away * (required - rel_vel.dot(away));
            HalfPlane {
                point: v_opt_a + u * share,
                normal: away,
            }
        }
        Err(e) => panic!("invalid agent geometry for {} and {}: {e}", a.id, b.id),
    }
}

/// Patience after a step that ends at time `now` with speed `new_speed`.
///
/// Returns the new patience and the start of the current low-speed run.
pub fn update_patience(
    agent: &AgentState,
    new_speed: f64,
    v_pref_mag: f64,
    dt: f64,
    now: f64,
    params: &PorcaParams,
) -> (f64, Option<f64>) {
    let threshold = params.sigma_fraction * v_pref_mag;
    if v_pref_mag <= 0.0 || new_speed > threshold {
        return (1.0, None);
    }
    // The slow velocity was held over the step that just ended.
    let since = agent.low_speed_since.unwrap_or(now - dt);
    let patience = (-params.decay_rate * (now - since))
        .exp()
        .max(params.rho_min)
        .min(1.0);
    (patience, Some(since))
}

/// How an agent's velocity is determined during a step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Motion {
    /// Solve for a new velocity close to this preferred velocity.
    Preferred(Vector2),
    /// Keep the current velocity; the agent is driven externally.
    Fixed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub agents: Vec<AgentState>,
    /// Ids of agents whose constraints were infeasible and fell back.
    pub infeasible: Vec<u32>,
}

fn v_opt(agent: &AgentState, motion: &Motion, params: &PorcaParams) -> Vector2 {
    match (params.v_opt_mode, motion) {
        (VOptMode::Preferred, Motion::Preferred(pref)) => *pref,
        _ => agent.velocity,
    }
}

/// Neighbours of `agents[index]` ordered by (distance, id), capped.
pub fn neighbors(agents: &[AgentState], index: usize, params: &PorcaParams) -> Vec<usize> {
    let me = &agents[index];
    let limit_sq = params.neighbor_radius * params.neighbor_radius;
    let mut found: Vec<(f64, u32, usize)> = agents
        .iter()
        .enumerate()
        .filter(|(j, other)| *j != index && other.id != me.id)
        .filter_map(|(j, other)| {
            let d = (other.position - me.position).length_squared();
            (d <= limit_sq).then_some((d, other.id, j))
        })
        .collect();
    found.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    found.truncate(params.max_neighbors);
    found.into_iter().map(|(_, _, j)| j).collect()
}

/// Half-planes constraining `agents[index]` under the given motions.
pub fn agent_constraints(
    agents: &[AgentState],
    motions: &[Motion],
    index: usize,
    params: &PorcaParams,
    dt: f64,
) -> Vec<HalfPlane> {
    let me = &agents[index];
    let my_opt = v_opt(me, &motions[index], params);
    neighbors(agents, index, params)
        .into_iter()
        .map(|j| {
            let other = &agents[j];
            let share = pair_share(me, other, params);
            orca_halfplane(
                me,
                other,
                my_opt,
                v_opt(other, &motions[j], params),
                params.tau,
                share,
                dt,
            )
        })
        .collect()
}

/// New velocity for `agents[index]` given its preferred velocity. The flag is
/// set when the constraints were infeasible.
pub fn solve_agent_velocity(
    agents: &[AgentState],
    motions: &[Motion],
    index: usize,
    preferred: Vector2,
    params: &PorcaParams,
    dt: f64,
) -> (Vector2, bool) {
    let me = &agents[index];
    let planes = agent_constraints(agents, motions, index, params, dt);
    let preferred = preferred.clamp_length(me.max_speed);
    let prog = VelocityProgram {
        half_planes: planes,
        max_speed: me.max_speed,
        preferred,
        patience: me.patience.clamp(params.rho_min.min(1.0), 1.0),
        current: me.velocity,
    };
    let solved = match (me.kind, params.objective) {
        (AgentKind::Pedestrian, Objective::Patience) => solve_patience_objective(&prog),
        _ => solve_linear_objective(&prog),
    };
    match solved {
        Ok(v) => (v, false),
        Err(_) => (
            fallback_least_violation(&prog.half_planes, me.max_speed).velocity,
            true,
        ),
    }
}

/// Advances every agent one step from the same snapshot.
///
/// `now` is the time at the start of the step.
pub fn advance(
    agents: &[AgentState],
    motions: &[Motion],
    params: &PorcaParams,
    dt: f64,
    now: f64,
) -> StepOutcome {
    assert_eq!(agents.len(), motions.len(), "one motion per agent");
    assert!(dt > 0.0, "dt must be positive, was {dt}");
    let end = now + dt;
    let mut next = Vec::with_capacity(agents.len());
    let mut infeasible = Vec::new();
    for (i, agent) in agents.iter().enumerate() {
        let mut state = agent.clone();
        match motions[i] {
            Motion::Fixed => {
                state.position += agent.velocity * dt;
            }
            Motion::Preferred(pref) => {
                let (v, failed) = solve_agent_velocity(agents, motions, i, pref, params, dt);
                if failed {
                    infeasible.push(agent.id);
                }
                state.position += v * dt;
                state.velocity = v;
                if agent.kind == AgentKind::Pedestrian && params.objective == Objective::Patience {
                    let (patience, since) =
                        update_patience(agent, v.length(), pref.length(), dt, end, params);
                    state.patience = patience;
                    state.low_speed_since = since;
                } else {
                    state.patience = 1.0;
                    state.low_speed_since = None;
                }
            }
        }
        next.push(state);
    }
    StepOutcome {
        agents: next,
        infeasible,
    }
}

/// One synchronous step with every agent steering toward its intention.
pub fn porca_step(
    agents: &[AgentState],
    intentions: &[Intention],
    params: &PorcaParams,
    dt: f64,
    now: f64,
) -> StepOutcome {
    assert_eq!(agents.len(), intentions.len(), "one intention per agent");
    let motions: Vec<Motion> = agents
        .iter()
        .zip(intentions)
        .map(|(a, it)| Motion::Preferred(preferred_velocity(a, it, params)))
        .collect();
    advance(agents, &motions, params, dt, now)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: f64, y: f64) -> Vector2 {
        Vector2::new(x, y)
    }

    #[test]
    fn preferred_velocity_examples() {
        let params = PorcaParams::default();
        let ped = AgentState::pedestrian(0, Vector2::ZERO, Vector2::ZERO);
        assert_eq!(
            preferred_velocity(&ped, &Intention::Goal(v(10.0, 0.0)), &params),
            v(1.2, 0.0)
        );
        assert_eq!(
            preferred_velocity(&ped, &Intention::Stop, &params),
            Vector2::ZERO
        );
        assert_eq!(
            preferred_velocity(&ped, &Intention::Goal(v(0.2, 0.1)), &params),
            Vector2::ZERO
        );
    }

    #[test]
    fn responsibility_schedule() {
        let params = PorcaParams::default();
        assert_eq!(responsibility(1.5, &params), 0.5);
        assert_eq!(responsibility(4.0, &params), 0.5);
        assert!((responsibility(0.0, &params) - 0.95).abs() < 1e-15);
        assert!((responsibility(0.75, &params) - 0.725).abs() < 1e-15);
        assert!((responsibility(-0.3, &params) - 0.95).abs() < 1e-15);
    }

    #[test]
    fn pair_shares_sum_to_one() {
        let params = PorcaParams::default();
        let ped = AgentState::pedestrian(0, v(0.0, 0.0), Vector2::ZERO);
        let car = AgentState::vehicle(1, v(1.7, 0.3), Vector2::ZERO, 1.0, 1.0);
        let s = pair_share(&ped, &car, &params) + pair_share(&car, &ped, &params);
        assert_eq!(s, 1.0);
        assert!(pair_share(&ped, &car, &params) > 0.5);
    }

    #[test]
    fn halfplane_examples() {
        let a = AgentState::pedestrian(0, v(0.0, 0.0), Vector2::ZERO).with_radius(0.5);
        let b = AgentState::pedestrian(1, v(10.0, 0.0), Vector2::ZERO).with_radius(0.5);
        let hp = orca_halfplane(&a, &b, Vector2::ZERO, Vector2::ZERO, 2.0, 0.5, 1.0 / 3.0);
        assert!((hp.point - v(2.25, 0.0)).length() < 1e-12);
        assert!((hp.normal - v(-1.0, 0.0)).length() < 1e-12);
        let hp = orca_halfplane(&a, &b, Vector2::ZERO, Vector2::ZERO, 2.0, 0.95, 1.0 / 3.0);
        assert!((hp.point - v(4.275, 0.0)).length() < 1e-12);
    }

    #[test]
    fn overlapping_pair_gets_emergency_plane() {
        let a = AgentState::pedestrian(0, v(0.0, 0.0), Vector2::ZERO);
        let b = AgentState::pedestrian(1, v(0.3, 0.0), Vector2::ZERO);
        let dt = 1.0 / 3.0;
        let hp = orca_halfplane(&a, &b, Vector2::ZERO, Vector2::ZERO, 2.0, 0.5, dt);
        assert!((hp.normal - v(-1.0, 0.0)).length() < 1e-12);
        // Half of the 0.2 m overlap must be removed within dt.
        assert!((hp.point.x + 0.1 / dt).abs() < 1e-12);
        assert!(!hp.contains(Vector2::ZERO));
    }

    #[test]
    fn patience_examples() {
        let params = PorcaParams::default();
        let dt = 1.0 / 3.0;
        let mut ped = AgentState::pedestrian(0, Vector2::ZERO, Vector2::ZERO);
        assert_eq!(
            update_patience(&ped, 1.0, 1.2, dt, 5.0, &params),
            (1.0, None)
        );

        let (p, since) = update_patience(&ped, 0.1, 1.2, dt, 1.0, &params);
        assert!((p - (-1.0f64 / 3.0).exp()).abs() < 1e-12);
        assert!((p - 0.7165).abs() < 1e-4);
        ped.low_speed_since = since;
        let (p, _) = update_patience(&ped, 0.1, 1.2, dt, 100.0, &params);
        assert_eq!(p, 0.1);
        // Speed back above 0.24 resets.
        assert_eq!(
            update_patience(&ped, 0.3, 1.2, dt, 101.0, &params),
            (1.0, None)
        );
        // Not intending to move.
        assert_eq!(
            update_patience(&ped, 0.0, 0.0, dt, 101.0, &params),
            (1.0, None)
        );
    }

    #[test]
    fn single_agent_moves_freely() {
        let params = PorcaParams::default();
        let ped = AgentState::pedestrian(0, Vector2::ZERO, Vector2::ZERO);
        let out = porca_step(
            &[ped],
            &[Intention::Goal(v(10.0, 0.0))],
            &params,
            1.0 / 3.0,
            0.0,
        );
        assert!((out.agents[0].position - v(0.4, 0.0)).length() < 1e-12);
        assert!((out.agents[0].velocity - v(1.2, 0.0)).length() < 1e-12);
        assert!(out.infeasible.is_empty());
    }

    #[test]
    fn distant_agents_do_not_interact() {
        let params = PorcaParams::default();
        let a = AgentState::pedestrian(0, v(0.0, 0.0), v(0.3, 0.0));
        let b = AgentState::pedestrian(1, v(20.0, 0.0), v(-0.5, 0.1));
        let ia = Intention::Goal(v(30.0, 0.0));
        let ib = Intention::Goal(v(-5.0, 2.0));
        let joint = porca_step(&[a.clone(), b.clone()], &[ia, ib], &params, 0.25, 3.0);
        let alone_a = porca_step(&[a], &[ia], &params, 0.25, 3.0);
        let alone_b = porca_step(&[b], &[ib], &params, 0.25, 3.0);
        assert_eq!(joint.agents[0], alone_a.agents[0]);
        assert_eq!(joint.agents[1], alone_b.agents[0]);
    }

    #[test]
    fn stop_intention_keeps_full_patience() {
        let params = PorcaParams::default();
        let mut ped = AgentState::pedestrian(0, Vector2::ZERO, Vector2::ZERO);
        ped.patience = 0.4;
        let out = porca_step(&[ped], &[Intention::Stop], &params, 0.25, 0.0);
        assert_eq!(out.agents[0].patience, 1.0);
        assert_eq!(out.agents[0].velocity, Vector2::ZERO);
    }

    #[test]
    fn params_validation() {
        assert!(PorcaParams::default().validate().is_ok());
        let bad = PorcaParams {
            rho_min: 0.2,
            ..PorcaParams::default()
        };
        assert!(bad.validate().is_err());
        let bad = PorcaParams {
            resp_max: 1.0,
            ..PorcaParams::default()
        };
        assert!(bad.validate().is_err());
    }
}
