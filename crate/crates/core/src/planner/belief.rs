use std::collections::BTreeMap;

use rand::Rng;

use crate::geom::Vector2;
use crate::porca::{solve_agent_velocity, AgentState, Intention, Motion, PorcaParams};
use crate::sim::{vehicle_agent, Observation, VehicleParams};

/// Per-pedestrian probability vectors over a shared intention set.
#[derive(Clone, Debug, PartialEq)]
pub struct Belief {
    intentions: Vec<Intention>,
    probs: BTreeMap<u32, Vec<f64>>,
}

impl Belief {
    pub fn new(intentions: Vec<Intention>) -> Self {
        assert!(
            !intentions.is_empty(),
            "belief needs at least one intention"
        );
        Belief {
            intentions,
            probs: BTreeMap::new(),
        }
    }

    pub fn intentions(&self) -> &[Intention] {
        &self.intentions
    }

    fn uniform(&self) -> Vec<f64> {
        vec![1.0 / self.intentions.len() as f64; self.intentions.len()]
    }

    /// The distribution for `id`; uniform for unseen pedestrians.
    pub fn get(&self, id: u32) -> Vec<f64> {
        self.probs
            .get(&id)
            .cloned()
            .unwrap_or_else(|| self.uniform())
    }

    pub fn tracked(&self) -> impl Iterator<Item = (u32, &[f64])> {
        self.probs.iter().map(|(id, p)| (*id, p.as_slice()))
    }

    pub fn set(&mut self, id: u32, probs: Vec<f64>) {
        assert_eq!(probs.len(), self.intentions.len());
        self.probs.insert(id, probs);
    }

    /// Starts tracking every pedestrian in `obs` not seen before and forgets
    /// those no longer present.
    pub fn sync(&mut self, obs: &Observation) {
        self.probs
            .retain(|id, _| obs.pedestrians.iter().any(|p| p.id == *id));
        for p in &obs.pedestrians {
            if !self.probs.contains_key(&p.id) {
                let u = self.uniform();
                self.probs.insert(p.id, u);
            }
        }
    }

    pub fn most_likely(&self, id: u32) -> usize {
        let p = self.get(id);
        (0..p.len()).fold(0, |best, i| if p[i] > p[best] { i } else { best })
    }

    /// Draws an intention index for `id`.
    pub fn sample<R: Rng + ?Sized>(&self, id: u32, rng: &mut R) -> usize {
        let p = self.get(id);
        let mut u: f64 = rng.gen::<f64>();
        for (i, w) in p.iter().enumerate() {
            if u < *w {
                return i;
            }
            u -= w;
        }
        // Rounding left a sliver; take the last intention with mass.
        p.iter().rposition(|w| *w > 0.0).unwrap_or(p.len() - 1)
    }
}

/// Summary of one belief update.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BeliefUpdate {
    /// Pedestrians whose likelihoods all vanished and were reset to uniform.
    pub reset: Vec<u32>,
}

/// Noise-free position of pedestrian `index` one step after `prev` under
/// `intention`, with everyone else continuing at their observed velocity.
pub fn predict_position(
    agents: &[AgentState],
    motions: &[Motion],
    index: usize,
    intention: &Intention,
    params: &PorcaParams,
    dt: f64,
) -> Vector2 {
    let pref = crate::porca::preferred_velocity(&agents[index], intention, params);
    let (v, _) = solve_agent_velocity(agents, motions, index, pref, params, dt);
    agents[index].position + v * dt
}

/// Bayes update of every pedestrian present in both observations.
#[allow(clippy::too_many_arguments)]
pub fn belief_update(
    belief: &mut Belief,
    prev: &Observation,
    new: &Observation,
    vehicle: &VehicleParams,
    pedestrian: &AgentState,
    params: &PorcaParams,
    sigma: f64,
) -> BeliefUpdate {
    let dt = new.time - prev.time;
    let mut report = BeliefUpdate::default();
    belief.sync(new);
    if dt <= 0.0 {
        return report;
    }
    let mut agents: Vec<AgentState> = prev
        .pedestrians
        .iter()
        .map(|p| {
            let mut a = pedestrian.clone();
            a.id = p.id;
            a.position = p.position;
            a.velocity = p.velocity;
            a.patience = 1.0;
            a.low_speed_since = None;
            a
        })
        .collect();
    agents.push(vehicle_agent(&prev.vehicle, vehicle));
    let mut motions: Vec<Motion> = agents
        .iter()
        .map(|a| Motion::Preferred(a.velocity))
        .collect();
    *motions.last_mut().expect("vehicle present") = Motion::Fixed;

    let two_sigma_sq = 2.0 * sigma * sigma;
    let intentions = belief.intentions.clone();
    for (i, obs) in prev.pedestrians.iter().enumerate() {
        let Some(now) = new.pedestrians.iter().find(|p| p.id == obs.id) else {
            continue;
        };
        let prior = belief.get(obs.id);
        let mut posterior: Vec<f64> = intentions
            .iter()
            .zip(&prior)
            .map(|(intention, w)| {
                if *w == 0.0 {
                    return 0.0;
                }
                let predicted = predict_position(&agents, &motions, i, intention, params, dt);
                w * (-(now.position - predicted).length_squared() / two_sigma_sq).exp()
            })
            .collect();
        let total: f64 = posterior.iter().sum();
        if total > 0.0 && total.is_finite() {
            posterior.iter_mut().for_each(|p| *p /= total);
        } else {
            posterior = belief.uniform();
            report.reset.push(obs.id);
        }
        belief.set(obs.id, posterior);
    }
    report
}
