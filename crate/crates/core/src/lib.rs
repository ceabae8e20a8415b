//! Simulation kernel for the Market Contact Protocol (MCP).
//!
//! Peers move over geographic paths or bounded fields (or replay recorded
//! contact traces) and spread content by periodic short-range broadcasts.
//! Everything here is deterministic under a seed and needs only `alloc`;
//! file formats, IO and the command line live in the `mcp-sim` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod engine;
pub mod geo;
pub mod mobility;
pub mod protocol;
pub mod rng;
pub mod stats;
pub mod traces;

pub use engine::{run, run_replicated, Scenario, SeedPosition, SimConfig, World};
pub use geo::WayPoint;
pub use protocol::{Message, MessageId, PeerId};
pub use stats::{Aggregate, RunResult};
