//! Time-varying communication graph, UAV mobility, link delays and the
//! transmission/compute energy model.

pub mod energy;
pub mod graph;
pub mod mobility;

pub use energy::{round_energy, EnergyAccount, EnergyModel, MemberCost};
pub use graph::{deliver, grid_positions, CommGraph, Delay, LinkModel, NodeKind};
pub use mobility::{spawn, step_mobility, Area, GaussMarkovParams, UavState, Vec3};
