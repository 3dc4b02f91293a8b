mod common;

use common::{random_crowd, reciprocal_pair_gap, v};
use porca::porca::{pair_share, porca_step, responsibility, AgentState, Intention, PorcaParams};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DT: f64 = 1.0 / 3.0;

fn crowd_with_vehicle(seed: u64, n: usize) -> (Vec<AgentState>, Vec<Intention>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut agents, mut intentions) = random_crowd(&mut rng, n);
    let p = v(rng.gen_range(-6.0..-5.0), rng.gen_range(-1.0..1.0));
    agents.push(AgentState::vehicle(1000, p, v(0.8, 0.0), 1.0, 1.0));
    intentions.push(Intention::Goal(v(20.0, p.y)));
    (agents, intentions)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn reciprocal_planes_keep_pairs_apart(
        seed in any::<u64>(),
        share in prop::sample::select(vec![0.5, 0.7, 0.95]),
        tau in 0.5f64..4.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gap = reciprocal_pair_gap(&mut rng, share, tau);
        prop_assert!(gap > -1e-9, "gap {gap}");
    }

    #[test]
    fn shares_sum_to_one(gap in -1.0f64..5.0, dx in 1.3f64..6.0, dy in -3.0f64..3.0) {
        let params = PorcaParams::default();
        let r = responsibility(gap, &params);
        prop_assert!((0.5..=0.95).contains(&r));
        let ped = AgentState::pedestrian(0, v(dx, dy), v(0.0, 0.0));
        let veh = AgentState::vehicle(1, v(0.0, 0.0), v(1.0, 0.0), 1.0, 1.0);
        prop_assert_eq!(pair_share(&ped, &veh, &params) + pair_share(&veh, &ped, &params), 1.0);
    }

    #[test]
    fn permuting_agents_changes_nothing(seed in any::<u64>(), n in 2usize..9, rot in 1usize..8) {
        let (agents, intentions) = crowd_with_vehicle(seed, n);
        let params = PorcaParams::default();
        let out = porca_step(&agents, &intentions, &params, DT, 1.0).agents;
        let k = rot % agents.len();
        let mut order: Vec<usize> = (0..agents.len()).collect();
        order.rotate_left(k);
        order.swap(0, agents.len() - 1);
        let pa: Vec<AgentState> = order.iter().map(|&i| agents[i].clone()).collect();
        let pi: Vec<Intention> = order.iter().map(|&i| intentions[i]).collect();
        let permuted = porca_step(&pa, &pi, &params, DT, 1.0).agents;
        for (slot, &i) in order.iter().enumerate() {
            prop_assert_eq!(&permuted[slot], &out[i]);
        }
    }

    #[test]
    fn steps_are_deterministic(seed in any::<u64>(), n in 1usize..9) {
        let (agents, intentions) = crowd_with_vehicle(seed, n);
        let params = PorcaParams::default();
        let a = porca_step(&agents, &intentions, &params, DT, 0.0);
        let b = porca_step(&agents, &intentions, &params, DT, 0.0);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn patience_and_speed_stay_bounded(seed in any::<u64>(), n in 2usize..9) {
        let (mut agents, intentions) = crowd_with_vehicle(seed, n);
        let params = PorcaParams::default();
        for step in 0..30 {
            agents = porca_step(&agents, &intentions, &params, DT, (step + 1) as f64 * DT).agents;
            for (a, it) in agents.iter().zip(&intentions) {
                prop_assert!(a.patience >= params.rho_min - 1e-12 && a.patience <= 1.0);
                prop_assert!(a.velocity.length() <= a.max_speed + 1e-6);
                if *it == Intention::Stop {
                    prop_assert_eq!(a.patience, 1.0);
                }
            }
        }
    }
}

#[test]
fn halfplane_examples() {
    let a = AgentState::pedestrian(0, v(0.0, 0.0), v(0.0, 0.0)).with_radius(0.5);
    let b = AgentState::pedestrian(1, v(10.0, 0.0), v(0.0, 0.0)).with_radius(0.5);
    for (share, x) in [(0.5, 2.25), (0.95, 4.275)] {
        let hp = porca::porca::orca_halfplane(&a, &b, a.velocity, b.velocity, 2.0, share, DT);
        assert!(hp.point.distance(v(x, 0.0)) < 1e-12);
        assert!(hp.normal.distance(v(-1.0, 0.0)) < 1e-12);
    }
}

#[test]
fn lone_pedestrian_walks_at_preferred_speed() {
    let a = AgentState::pedestrian(0, v(0.0, 0.0), v(0.0, 0.0));
    let out = porca_step(
        &[a],
        &[Intention::Goal(v(10.0, 0.0))],
        &PorcaParams::default(),
        DT,
        DT,
    );
    assert!(out.agents[0].position.distance(v(0.4, 0.0)) < 1e-12);
    assert!(out.agents[0].velocity.distance(v(1.2, 0.0)) < 1e-12);
}
