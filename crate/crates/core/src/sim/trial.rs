use std::time::Duration;

use super::log::LogRecord;
use super::scenario::{CollisionPolicy, ScenarioConfig};
use super::world::{step_world, Environment};
use super::SimError;
use crate::geom::Vector2;
use crate::planner::{belief_update, Belief, Controller};
use crate::porca::AgentState;
use crate::rng;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrialMetrics {
    pub collided: bool,
    pub collision_count: u32,
    /// Time to reach the goal; meaningful only on success.
    pub travel_time: f64,
    pub accel_decel_count: u32,
    pub success: bool,
    pub steps: u64,
    /// Steps on which some pedestrian needed the infeasible fallback.
    pub infeasible_steps: u32,
    /// Plans that returned the rollout action without a root expansion.
    pub fallback_plans: u32,
    /// Plans slower than the configured budget.
    pub over_budget: u32,
    pub max_plan_time: Duration,
}

#[derive(Clone, Debug, Default)]
pub struct TrialOptions {
    pub record_log: bool,
    /// Planning time considered on budget; only used for diagnostics.
    pub budget: Option<Duration>,
}

#[derive(Clone, Debug)]
pub struct TrialOutcome {
    pub metrics: TrialMetrics,
    pub log: Vec<LogRecord>,
}

/// Runs one seeded trial until the goal, a terminating collision or timeout.
pub fn run_trial(
    cfg: &ScenarioConfig,
    controller: &mut dyn Controller,
    seed: u64,
    options: &TrialOptions,
) -> Result<TrialOutcome, SimError> {
    let env = Environment::from_scenario(cfg);
    let mut world = cfg.instantiate(seed)?;
    let mut rng = rng::stream(seed, &[0x5eed, 2]);
    controller.reset(seed);
    let template = AgentState::pedestrian(0, Vector2::ZERO, Vector2::ZERO)
        .with_radius(env.pedestrian.radius)
        .with_speeds(env.pedestrian.pref_speed, env.pedestrian.max_speed);
    let mut belief = Belief::new(env.intention_set());
    let tracks_belief = controller.uses_belief();
    let mut obs = world.observe();
    if tracks_belief {
        belief.sync(&obs);
    }

    let max_steps = (env.sim.timeout / env.sim.dt - 1e-9).ceil() as u64;
    let mut metrics = TrialMetrics::default();
    let mut log = Vec::new();
    while world.step < max_steps {
        let decision = controller.act(&obs, &belief);
        metrics.fallback_plans += decision.fallback as u32;
        metrics.max_plan_time = metrics.max_plan_time.max(decision.elapsed);
        if options.budget.is_some_and(|b| decision.elapsed > b) {
            metrics.over_budget += 1;
        }
        if decision.action.changes_speed() {
            metrics.accel_decel_count += 1;
        }
        let report = step_world(&mut world, &env, decision.action, &mut rng);
        metrics.infeasible_steps += !report.infeasible.is_empty() as u32;
        if options.record_log {
            log.push(LogRecord::capture(&world, decision.action));
        }
        if !report.collided.is_empty() {
            metrics.collided = true;
            metrics.collision_count += report.collided.len() as u32;
            if env.sim.collision_policy == CollisionPolicy::Terminate {
                break;
            }
        }
        if world.goal_reached {
            metrics.success = true;
            metrics.travel_time = world.time;
            break;
        }
        let next = world.observe();
        if tracks_belief {
            belief_update(
                &mut belief,
                &obs,
                &next,
                &env.vehicle,
                &template,
                &env.porca,
                controller.belief_sigma(),
            );
        }
        obs = next;
    }
    metrics.steps = world.step;
    Ok(TrialOutcome { metrics, log })
}

/// Aggregate over trials. Collision rate counts every trial; travel time and
/// speed changes average over successful trials only.
#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub scenario: String,
    pub algorithm: String,
    pub trials: usize,
    pub collision_rate: f64,
    pub mean_travel_time: f64,
    pub mean_accel_decel: f64,
    pub success_rate: f64,
}

pub fn summarize(scenario: &str, algorithm: &str, trials: &[TrialMetrics]) -> Summary {
    let n = trials.len();
    let successes: Vec<&TrialMetrics> = trials.iter().filter(|m| m.success).collect();
    let mean = |f: &dyn Fn(&TrialMetrics) -> f64| {
        if successes.is_empty() {
            f64::NAN
        } else {
            successes.iter().map(|m| f(m)).sum::<f64>() / successes.len() as f64
        }
    };
    let rate = |count: usize| {
        if n == 0 {
            f64::NAN
        } else {
            count as f64 / n as f64
        }
    };
    Summary {
        scenario: scenario.to_string(),
        algorithm: algorithm.to_string(),
        trials: n,
        collision_rate: rate(trials.iter().filter(|m| m.collided).count()),
        mean_travel_time: mean(&|m| m.travel_time),
        mean_accel_decel: mean(&|m| m.accel_decel_count as f64),
        success_rate: rate(successes.len()),
    }
}

fn fmt(x: f64, places: usize) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:.places$}")
    }
}

impl Summary {
    pub const CSV_HEADER: &'static str =
        "scenario,algorithm,trials,collision_rate,mean_travel_time_s,mean_accel_decel,success_rate";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.scenario,
            self.algorithm,
            self.trials,
            fmt(self.collision_rate, 4),
            fmt(self.mean_travel_time, 3),
            fmt(self.mean_accel_decel, 3),
            fmt(self.success_rate, 4)
        )
    }
}
