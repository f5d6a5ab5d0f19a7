//! Discrete-event building-evacuation simulator whose routing core is a
//! cognitive packet network: per-node random neural networks trained online
//! by reinforcement learning route evacuees under distance, time, energy and
//! safety goals, benchmarked against autonomous and centralized shortest-path
//! policies.

pub mod building;
pub mod cpn;
pub mod fixtures;
pub mod goals;
pub mod hazard;
pub mod queueing;
pub mod rnn;
pub mod sim;
