//! Crowd navigation toolkit: reciprocal collision avoidance with patience and
//! responsibility sharing, an intention-aware speed planner, a closed-loop
//! crowd simulator and a trajectory-prediction evaluation harness.

pub mod geom;
pub mod planner;
pub mod porca;
pub mod predict;
pub mod rng;
pub mod sim;
pub mod velocity_opt;
