use porca::geom::Vector2;
use porca::planner::model::ModelState;
use porca::planner::search::Particle;
use porca::planner::{
    belief_update, plan_action, reward, Belief, MotionModel, PomdpController, PomdpParams,
    RewardParams,
};
use porca::porca::AgentState;
use porca::sim::{Action, Environment, Observation, PedestrianObs, ScenarioConfig, VehicleState};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn v(x: f64, y: f64) -> Vector2 {
    Vector2::new(x, y)
}

fn small_params() -> PomdpParams {
    PomdpParams {
        scenario_count: 20,
        max_trials: 16,
        ..PomdpParams::default()
    }
}

fn controller(cfg: &ScenarioConfig, params: PomdpParams, motion: MotionModel) -> PomdpController {
    PomdpController::new(&Environment::from_scenario(cfg), params, motion)
}

fn start(cfg: &ScenarioConfig, seed: u64) -> (Observation, Belief) {
    let env = Environment::from_scenario(cfg);
    let obs = cfg.instantiate(seed).unwrap().observe();
    let mut belief = Belief::new(env.intention_set());
    belief.sync(&obs);
    (obs, belief)
}

fn open_road() -> ScenarioConfig {
    ScenarioConfig::from_json(
        r#"{"name": "open", "goals": [[8, 6]], "vehicle": {"path": [[0, 0], [30, 0]]}}"#,
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn rewards_stay_in_range(
        speed in 0.0f64..=1.0,
        a in 0usize..3,
        collided in any::<bool>(),
        reached in any::<bool>(),
    ) {
        let p = RewardParams::default();
        let r = reward(speed, Action::ALL[a], collided, reached, &p);
        prop_assert!(r <= 0.0);
        prop_assert!(r >= -1000.0 * (1.0 + 0.5) - 1.1);
        prop_assert!(r >= p.min_step_reward());
    }

    #[test]
    fn beliefs_stay_normalised(seed in any::<u64>(), n in 1usize..6, steps in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = ScenarioConfig::builtin("s2").unwrap();
        let env = Environment::from_scenario(&cfg);
        let mut belief = Belief::new(env.intention_set());
        let template = AgentState::pedestrian(0, Vector2::ZERO, Vector2::ZERO);
        let vehicle = VehicleState::at_start(&env.path, 0.5);
        let mut obs = Observation {
            time: 0.0,
            vehicle,
            pedestrians: (0..n as u32)
                .map(|id| PedestrianObs {
                    id,
                    position: v(rng.gen_range(2.0..12.0), rng.gen_range(-4.0..4.0)),
                    velocity: v(rng.gen_range(-1.2..1.2), rng.gen_range(-1.2..1.2)),
                })
                .collect(),
        };
        belief.sync(&obs);
        for _ in 0..steps {
            let mut next = obs.clone();
            next.time += 1.0 / 3.0;
            for p in &mut next.pedestrians {
                let step = v(rng.gen_range(-0.6..0.6), rng.gen_range(-0.6..0.6));
                p.position += step;
                p.velocity = step * 3.0;
            }
            belief_update(&mut belief, &obs, &next, &env.vehicle, &template, &env.porca, 0.2);
            for p in &next.pedestrians {
                let probs = belief.get(p.id);
                prop_assert!(probs.iter().all(|w| *w >= 0.0));
                prop_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
            obs = next;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn root_value_is_at_least_the_rollout_value(
        seed in any::<u64>(),
        scenario in prop::sample::select(vec!["s1", "s2", "s3"]),
        motion in prop::sample::select(vec![MotionModel::Porca, MotionModel::PrefVel]),
    ) {
        let cfg = ScenarioConfig::builtin(scenario).unwrap();
        let ctrl = controller(&cfg, small_params(), motion);
        let (obs, belief) = start(&cfg, seed);
        let particles = ctrl.particles(&obs, &belief, seed);
        let result = plan_action(ctrl.model(), particles.clone(), seed, None);
        prop_assert!(!result.fallback);
        prop_assert!(result.root_lower >= result.rollout_value - 1e-9);
        prop_assert!(result.root_upper >= result.root_lower - 1e-9);
        let again = plan_action(ctrl.model(), particles, seed, None);
        prop_assert_eq!(result, again);
    }
}

fn depth_one(speed: f64) -> Action {
    let cfg = open_road();
    let params = PomdpParams {
        search_depth: 1,
        ..small_params()
    };
    let ctrl = controller(&cfg, params, MotionModel::Porca);
    let (mut obs, belief) = start(&cfg, 0);
    obs.vehicle.speed = speed;
    plan_action(ctrl.model(), ctrl.particles(&obs, &belief, 1), 1, None).action
}

#[test]
fn empty_road_accelerates_below_top_speed() {
    for speed in [0.0, 0.3, 0.6, 0.85] {
        assert_eq!(depth_one(speed), Action::Accelerate, "speed {speed}");
    }
    // One step short of top speed the gain only matches the accel penalty,
    // and ties go to Maintain.
    assert_eq!(depth_one(0.9), Action::Maintain);
}

#[test]
fn empty_road_holds_top_speed() {
    assert_eq!(depth_one(1.0), Action::Maintain);
}

// Best discounted return over every action sequence of length `depth` on one
// noise-free determinised world, with the first action of the best sequence.
// Ties keep the earlier action in `order`.
fn exhaustive(ctrl: &PomdpController, state: &ModelState, depth: usize) -> (f64, Action) {
    fn go(ctrl: &PomdpController, s: &ModelState, depth: usize) -> f64 {
        if depth == 0 || s.terminal {
            return 0.0;
        }
        let model = ctrl.model();
        Action::ALL
            .iter()
            .map(|&a| {
                let mut next = s.clone();
                let mut rng = ChaCha8Rng::seed_from_u64(0);
                let r = model.step(&mut next, a, &mut rng);
                r + model.gamma() * go(ctrl, &next, depth - 1)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }
    let order = [Action::Maintain, Action::Decelerate, Action::Accelerate];
    let model = ctrl.model();
    let mut best = (f64::NEG_INFINITY, Action::Maintain);
    for a in order {
        let mut next = state.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = model.step(&mut next, a, &mut rng);
        let value = r + model.gamma() * go(ctrl, &next, depth - 1);
        if value > best.0 + 1e-9 {
            best = (value, a);
        }
    }
    best
}

fn crossing(depth: usize, x: f64, y: f64) -> (PomdpController, Vec<Particle>) {
    let cfg = ScenarioConfig::from_json(&format!(
        r#"{{"name": "cross", "goals": [[{x}, 10]], "vehicle": {{"path": [[0, 0], [30, 0]]}}}}"#
    ))
    .unwrap();
    let params = PomdpParams {
        pedestrian_noise: 0.0,
        vehicle_noise: 0.0,
        search_depth: depth,
        scenario_count: 4,
        max_trials: 2000,
        ..PomdpParams::default()
    };
    let ctrl = controller(&cfg, params, MotionModel::PrefVel);
    let env = Environment::from_scenario(&cfg);
    let obs = Observation {
        time: 0.0,
        vehicle: VehicleState::at_start(&env.path, 1.0),
        pedestrians: vec![PedestrianObs {
            id: 0,
            position: v(x, y),
            velocity: v(0.0, 1.2),
        }],
    };
    let mut belief = Belief::new(env.intention_set());
    belief.sync(&obs);
    belief.set(0, vec![1.0, 0.0]);
    let particles = ctrl.particles(&obs, &belief, 3);
    (ctrl, particles)
}

#[test]
fn certain_crossing_ahead_brakes() {
    for (x, y) in [(2.0, -1.6), (2.4, -1.6), (2.2, -2.4)] {
        let (ctrl, particles) = crossing(10, x, y);
        let (value, action) = exhaustive(&ctrl, &particles[0].state, 10);
        assert_eq!(action, Action::Decelerate, "oracle at ({x}, {y})");
        let result = plan_action(ctrl.model(), particles, 3, None);
        assert_eq!(result.action, Action::Decelerate, "planner at ({x}, {y})");
        assert!((result.root_lower - value).abs() < 1e-9);
    }
}

#[test]
fn planner_matches_the_exhaustive_oracle() {
    for depth in [1, 4, 6] {
        for (x, y) in [(2.6, -1.6), (1.6, -1.6), (3.5, -3.0)] {
            let (ctrl, particles) = crossing(depth, x, y);
            let (value, action) = exhaustive(&ctrl, &particles[0].state, depth);
            let result = plan_action(ctrl.model(), particles, 3, None);
            assert_eq!(result.action, action, "depth {depth} at ({x}, {y})");
            assert!((result.root_lower - value).abs() < 1e-9);
        }
    }
}
