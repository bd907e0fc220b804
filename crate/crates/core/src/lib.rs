//! Red/blue influence wargame over a directed network of bounded-confidence
//! opinion holders.
//!
//! Opinions live on `[0, 1]` with Red pinned to pole `0.0` and Blue to pole
//! `1.0`. A run alternates single broadcasts (Red on odd rounds, Blue on even
//! rounds) with a shuffled asynchronous peer sweep over every edge, records
//! per-round observables, and stops on a strict majority or at the round cap.

pub mod agents;
pub mod cli;
pub mod dynamics;
pub mod engine;
pub mod metrics;
pub mod net;
pub mod persist;
pub mod rng;

pub use agents::{Agent, AgentAction, AgentError, Observation};
pub use dynamics::{DynamicsParams, Effect, GreenNodeState, Side};
pub use engine::{run_simulation, Outcome, OutcomeKind, RunTelemetry, SimConfig, Simulation};
pub use net::{GraphKind, GraphParams, NodeId, OpinionNetwork};
