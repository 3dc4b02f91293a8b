//! Anytime belief-tree search over a fixed set of determinised scenarios.
//!
//! Every scenario fixes the pedestrians' intentions and the noise stream used
//! at each depth, so the tree and the rollouts see the same futures. Nodes
//! keep a lower bound from rollouts of the reactive policy and an optimistic
//! upper bound; trials descend along the most promising action and the child
//! with the largest weighted bound gap.

use std::collections::BTreeMap;
use std::time::Instant;

use super::model::{ModelState, PlannerModel};
use crate::rng;
use crate::sim::Action;

/// One scenario's state at a node.
#[derive(Clone, Debug)]
pub struct Particle {
    pub scenario: u64,
    pub state: ModelState,
}

#[derive(Clone, Debug)]
struct ActionBranch {
    /// Mean immediate reward over the parent's particles.
    reward: f64,
    /// Child nodes with their share of the parent's particles.
    children: Vec<(usize, f64)>,
    lower: f64,
    upper: f64,
}

#[derive(Clone, Debug)]
struct Node {
    depth: usize,
    particles: Vec<Particle>,
    rollout: f64,
    lower: f64,
    upper: f64,
    branches: Option<Vec<ActionBranch>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlanResult {
    pub action: Action,
    /// The root was never expanded; `action` came from the rollout policy.
    pub fallback: bool,
    pub root_lower: f64,
    pub root_upper: f64,
    /// Average discounted return of the rollout policy alone.
    pub rollout_value: f64,
    /// Lower-bound action values at the root, indexed by [`Action::index`].
    pub action_values: Option<[f64; 3]>,
    pub trials: usize,
    pub nodes: usize,
}

struct OutOfTime;

struct Search<'a> {
    model: &'a PlannerModel,
    seed: u64,
    deadline: Option<Instant>,
    tracked: usize,
    nodes: Vec<Node>,
}

/// Root action preference among equal values.
const TIE_ORDER: [Action; 3] = [Action::Maintain, Action::Decelerate, Action::Accelerate];
const VALUE_TIE: f64 = 1e-9;

fn best_action(values: &[f64; 3]) -> Action {
    let mut best = TIE_ORDER[0];
    for &a in &TIE_ORDER[1..] {
        if values[a.index()] > values[best.index()] + VALUE_TIE {
            best = a;
        }
    }
    best
}

impl<'a> Search<'a> {
    fn check_time(&self) -> Result<(), OutOfTime> {
        match self.deadline {
            Some(d) if Instant::now() >= d => Err(OutOfTime),
            _ => Ok(()),
        }
    }

    fn noise(&self, scenario: u64, depth: usize) -> rand_chacha::ChaCha8Rng {
        rng::stream(self.seed, &[scenario, depth as u64])
    }

    fn rollout(&self, particle: &Particle, depth: usize) -> Result<f64, OutOfTime> {
        self.check_time()?;
        let model = self.model;
        let mut state = particle.state.clone();
        let mut value = 0.0;
        let mut discount = 1.0;
        for t in depth..model.params.search_depth {
            if state.terminal {
                break;
            }
            let action = model.rollout_action(&state);
            let mut rng = self.noise(particle.scenario, t);
            value += discount * model.step(&mut state, action, &mut rng);
            discount *= model.gamma();
        }
        Ok(value)
    }

    fn make_node(&self, depth: usize, particles: Vec<Particle>) -> Result<Node, OutOfTime> {
        let remaining = self.model.params.search_depth - depth;
        let n = particles.len() as f64;
        let mut rollout = 0.0;
        let mut upper = 0.0;
        for p in &particles {
            rollout += self.rollout(p, depth)?;
            upper += self.model.upper_bound(&p.state, remaining);
        }
        rollout /= n;
        upper = (upper / n).max(rollout);
        Ok(Node {
            depth,
            particles,
            rollout,
            lower: rollout,
            upper,
            branches: None,
        })
    }

    fn is_leaf(&self, node: usize) -> bool {
        let n = &self.nodes[node];
        n.depth >= self.model.params.search_depth || n.particles.iter().all(|p| p.state.terminal)
    }

    fn observation_key(&self, before: &ModelState, after: &ModelState) -> Vec<i64> {
        let cell = self.model.params.obs_cell;
        let mut key = Vec::with_capacity(2 * self.tracked + 2);
        key.push(after.terminal as i64);
        key.push((after.vehicle.speed / 0.1).round() as i64);
        for (a, b) in before
            .pedestrians
            .iter()
            .zip(&after.pedestrians)
            .take(self.tracked)
        {
            let d = b.position - a.position;
            key.push((d.x / cell).floor() as i64);
            key.push((d.y / cell).floor() as i64);
        }
        key
    }

    fn group(&self, outcomes: Vec<(Vec<i64>, Particle)>) -> Vec<Vec<Particle>> {
        let mut groups: BTreeMap<Vec<i64>, Vec<Particle>> = BTreeMap::new();
        for (key, p) in outcomes {
            groups.entry(key).or_default().push(p);
        }
        let mut ordered: Vec<(Vec<i64>, Vec<Particle>)> = groups.into_iter().collect();
        // Stable sort keeps key order among equally probable groups.
        ordered.sort_by_key(|b| std::cmp::Reverse(b.1.len()));
        let cap = self.model.params.max_children;
        if ordered.len() > cap {
            let extra = ordered.split_off(cap);
            for (key, particles) in extra {
                let nearest = (0..ordered.len())
                    .min_by_key(|&i| {
                        ordered[i]
                            .0
                            .iter()
                            .zip(&key)
                            .map(|(a, b)| (a - b).unsigned_abs())
                            .sum::<u64>()
                    })
                    .expect("at least one group kept");
                ordered[nearest].1.extend(particles);
            }
        }
        ordered.into_iter().map(|(_, p)| p).collect()
    }

    fn expand(&mut self, node: usize) -> Result<(), OutOfTime> {
        let depth = self.nodes[node].depth;
        let gamma = self.model.gamma();
        let parent_count = self.nodes[node].particles.len() as f64;
        let mut branches = Vec::with_capacity(3);
        let mut new_nodes: Vec<Node> = Vec::new();
        for action in Action::ALL {
            let mut reward = 0.0;
            let mut outcomes = Vec::with_capacity(self.nodes[node].particles.len());
            for p in &self.nodes[node].particles {
                self.check_time()?;
                let mut next = p.clone();
                if !p.state.terminal {
                    let mut rng = self.noise(p.scenario, depth);
                    reward += self.model.step(&mut next.state, action, &mut rng);
                }
                let key = self.observation_key(&p.state, &next.state);
                outcomes.push((key, next));
            }
            reward /= parent_count;
            let mut children = Vec::new();
            let (mut lower, mut upper) = (0.0, 0.0);
            for group in self.group(outcomes) {
                let weight = group.len() as f64 / parent_count;
                let child = self.make_node(depth + 1, group)?;
                lower += weight * child.lower;
                upper += weight * child.upper;
                children.push((self.nodes.len() + new_nodes.len(), weight));
                new_nodes.push(child);
            }
            branches.push(ActionBranch {
                reward,
                children,
                lower: reward + gamma * lower,
                upper: reward + gamma * upper,
            });
        }
        self.nodes.extend(new_nodes);
        self.nodes[node].branches = Some(branches);
        self.backup(node);
        Ok(())
    }

    fn backup(&mut self, node: usize) {
        let gamma = self.model.gamma();
        let Some(branches) = self.nodes[node].branches.as_ref() else {
            return;
        };
        let mut updated = branches.clone();
        for b in &mut updated {
            let (mut lower, mut upper) = (0.0, 0.0);
            for &(c, w) in &b.children {
                lower += w * self.nodes[c].lower;
                upper += w * self.nodes[c].upper;
            }
            b.lower = b.reward + gamma * lower;
            b.upper = b.reward + gamma * upper;
        }
        let best_lower = updated
            .iter()
            .map(|b| b.lower)
            .fold(f64::NEG_INFINITY, f64::max);
        let best_upper = updated
            .iter()
            .map(|b| b.upper)
            .fold(f64::NEG_INFINITY, f64::max);
        let n = &mut self.nodes[node];
        n.lower = n.rollout.max(best_lower);
        n.upper = best_upper.max(n.lower);
        n.branches = Some(updated);
    }

    /// One descent from the root; returns false once nothing is left to refine.
    fn trial(&mut self) -> Result<bool, OutOfTime> {
        self.check_time()?;
        let tolerance = self.model.params.gap_tolerance;
        let mut path = vec![0usize];
        let mut node = 0usize;
        let mut expanded = false;
        loop {
            if self.is_leaf(node) {
                break;
            }
            if self.nodes[node].branches.is_none() {
                self.expand(node)?;
                expanded = true;
            }
            let branches = self.nodes[node].branches.as_ref().expect("expanded");
            let mut best = &branches[Action::Maintain.index()];
            for a in [Action::Decelerate, Action::Accelerate] {
                if branches[a.index()].upper > best.upper + VALUE_TIE {
                    best = &branches[a.index()];
                }
            }
            let next = best
                .children
                .iter()
                .map(|&(c, w)| (c, w * (self.nodes[c].upper - self.nodes[c].lower)))
                .fold(None::<(usize, f64)>, |acc, (c, g)| match acc {
                    Some((_, bg)) if bg >= g => acc,
                    _ => Some((c, g)),
                });
            match next {
                Some((c, gap)) if gap > tolerance => {
                    node = c;
                    path.push(c);
                }
                _ => break,
            }
        }
        for &n in path.iter().rev() {
            self.backup(n);
        }
        let root = &self.nodes[0];
        Ok(expanded && root.upper - root.lower > tolerance)
    }
}

/// Chooses the vehicle action for the scenarios in `particles`.
///
/// Without a deadline the search stops after `max_trials` trials or when the
/// root bounds meet, so the result depends only on the inputs and `seed`.
pub fn plan_action(
    model: &PlannerModel,
    particles: Vec<Particle>,
    seed: u64,
    deadline: Option<Instant>,
) -> PlanResult {
    assert!(
        !particles.is_empty(),
        "planning needs at least one scenario"
    );
    let tracked = model.params.max_tracked;
    let mut search = Search {
        model,
        seed,
        deadline,
        tracked,
        nodes: Vec::new(),
    };
    let fallback_action = model.rollout_action(&particles[0].state);
    let root = match search.make_node(0, particles) {
        Ok(node) => node,
        Err(OutOfTime) => {
            return PlanResult {
                action: fallback_action,
                fallback: true,
                root_lower: f64::NAN,
                root_upper: f64::NAN,
                rollout_value: f64::NAN,
                action_values: None,
                trials: 0,
                nodes: 0,
            }
        }
    };
    let rollout_value = root.rollout;
    search.nodes.push(root);
    let mut trials = 0;
    while trials < model.params.max_trials {
        match search.trial() {
            Ok(more) => {
                trials += 1;
                if !more {
                    break;
                }
            }
            Err(OutOfTime) => break,
        }
    }
    let root = &search.nodes[0];
    match &root.branches {
        Some(branches) => {
            let values = [branches[0].lower, branches[1].lower, branches[2].lower];
            PlanResult {
                action: best_action(&values),
                fallback: false,
                root_lower: root.lower,
                root_upper: root.upper,
                rollout_value,
                action_values: Some(values),
                trials,
                nodes: search.nodes.len(),
            }
        }
        None => PlanResult {
            action: fallback_action,
            fallback: true,
            root_lower: root.lower,
            root_upper: root.upper,
            rollout_value,
            action_values: None,
            trials,
            nodes: search.nodes.len(),
        },
    }
}
