#![allow(dead_code)]

use porca::geom::{HalfPlane, Vector2};
use porca::velocity_opt::VelocityProgram;
use rand::Rng;

pub fn v(x: f64, y: f64) -> Vector2 {
    Vector2::new(x, y)
}

/// Random program with `planes` half-planes that all keep a common interior
/// point at least 0.05 m/s inside.
pub fn feasible_program<R: Rng>(rng: &mut R, planes: usize, max_speed: f64) -> VelocityProgram {
    let inner = Vector2::from_angle(rng.gen_range(0.0..std::f64::consts::TAU))
        * rng.gen_range(0.0..0.8 * max_speed);
    let half_planes = (0..planes)
        .map(|_| {
            let n = Vector2::from_angle(rng.gen_range(0.0..std::f64::consts::TAU));
            HalfPlane::new(inner - n * rng.gen_range(0.05..1.0), n).unwrap()
        })
        .collect();
    let preferred = Vector2::from_angle(rng.gen_range(0.0..std::f64::consts::TAU))
        * rng.gen_range(0.0..max_speed);
    let current = Vector2::from_angle(rng.gen_range(0.0..std::f64::consts::TAU))
        * rng.gen_range(0.0..max_speed);
    VelocityProgram::new(half_planes, max_speed, preferred).with_current(current)
}

pub fn linear_cost(prog: &VelocityProgram, x: Vector2) -> f64 {
    let d = x - prog.preferred;
    d.x * d.x + d.y * d.y
}

pub fn patience_objective(prog: &VelocityProgram, x: Vector2) -> f64 {
    let d = x - prog.preferred;
    let speed_gap = (x.x * x.x + x.y * x.y) - (prog.preferred.x.powi(2) + prog.preferred.y.powi(2));
    d.x * d.x + d.y * d.y + speed_gap.abs() / prog.patience
}

/// Minimum of `cost` over an `n` x `n` grid of the speed disc restricted to
/// the half-planes; `None` when no grid point is feasible.
pub fn grid_best(prog: &VelocityProgram, n: usize, cost: impl Fn(Vector2) -> f64) -> Option<f64> {
    let m = prog.max_speed;
    let mut best: Option<f64> = None;
    for i in 0..n {
        let x = -m + 2.0 * m * (i as f64 + 0.5) / n as f64;
        for j in 0..n {
            let y = -m + 2.0 * m * (j as f64 + 0.5) / n as f64;
            if x * x + y * y > m * m {
                continue;
            }
            let p = v(x, y);
            if prog
                .half_planes
                .iter()
                .any(|hp| (p - hp.point).dot(hp.normal) < 0.0)
            {
                continue;
            }
            let c = cost(p);
            best = Some(best.map_or(c, |b: f64| b.min(c)));
        }
    }
    best
}

/// Grid minimum of the largest violation over the speed disc.
pub fn grid_least_violation(planes: &[HalfPlane], max_speed: f64, n: usize) -> f64 {
    let m = max_speed;
    let mut best = f64::INFINITY;
    for i in 0..=n {
        let x = -m + 2.0 * m * i as f64 / n as f64;
        for j in 0..=n {
            let y = -m + 2.0 * m * j as f64 / n as f64;
            if x * x + y * y > m * m {
                continue;
            }
            let worst = planes
                .iter()
                .map(|hp| -(v(x, y) - hp.point).dot(hp.normal))
                .fold(f64::NEG_INFINITY, f64::max);
            best = best.min(worst);
        }
    }
    best
}

use porca::geom::closest_approach;
use porca::porca::{orca_halfplane, AgentState, Intention};

fn point_in(hp: &HalfPlane, rng: &mut impl Rng) -> Vector2 {
    // A quarter of the draws sit exactly on the boundary line.
    let depth = if rng.gen_bool(0.25) {
        0.0
    } else {
        rng.gen_range(0.0..2.0)
    };
    hp.point + hp.normal * depth + hp.direction() * rng.gen_range(-3.0..3.0)
}

/// Builds the two half-planes of a random non-overlapping pair with shares
/// `share` and `1 - share`, picks one velocity from each and returns the
/// smallest surface gap over the time window.
pub fn reciprocal_pair_gap<R: Rng>(rng: &mut R, share: f64, tau: f64) -> f64 {
    let ra = rng.gen_range(0.2..1.2);
    let rb = rng.gen_range(0.2..1.2);
    let pa = v(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
    let pb = loop {
        let p = v(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
        if p.distance(pa) > (ra + rb) * 1.001 {
            break p;
        }
    };
    let mut speed =
        || Vector2::from_angle(rng.gen_range(0.0..std::f64::consts::TAU)) * rng.gen_range(0.0..2.0);
    let (va, vb) = (speed(), speed());
    let a = AgentState::pedestrian(0, pa, va).with_radius(ra);
    let b = AgentState::pedestrian(1, pb, vb).with_radius(rb);
    let ha = orca_halfplane(&a, &b, va, vb, tau, share, 1.0 / 3.0);
    let hb = orca_halfplane(&b, &a, vb, va, tau, 1.0 - share, 1.0 / 3.0);
    let na = point_in(&ha, rng);
    let nb = point_in(&hb, rng);
    closest_approach(pb - pa, nb - na, tau) - (ra + rb)
}

/// Random pedestrians, spaced apart, each with a goal or a stop intention.
pub fn random_crowd<R: Rng>(rng: &mut R, n: usize) -> (Vec<AgentState>, Vec<Intention>) {
    let mut agents: Vec<AgentState> = Vec::new();
    while agents.len() < n {
        let p = v(rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0));
        if agents.iter().any(|a| a.position.distance(p) < 0.6) {
            continue;
        }
        let vel = Vector2::from_angle(rng.gen_range(0.0..std::f64::consts::TAU))
            * rng.gen_range(0.0..1.2);
        let mut a = AgentState::pedestrian(agents.len() as u32 * 7 + 3, p, vel);
        a.patience = rng.gen_range(0.1..=1.0);
        agents.push(a);
    }
    let intentions: Vec<Intention> = (0..n)
        .map(|_| {
            if rng.gen_bool(0.2) {
                Intention::Stop
            } else {
                Intention::Goal(v(rng.gen_range(-8.0..8.0), rng.gen_range(-8.0..8.0)))
            }
        })
        .collect();
    for (a, it) in agents.iter_mut().zip(&intentions) {
        if *it == Intention::Stop {
            a.patience = 1.0;
        }
    }
    (agents, intentions)
}
