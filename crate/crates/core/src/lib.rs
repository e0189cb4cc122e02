//! Asynchronous coverage partitioning for a team of surveillance agents that
//! only talk to a central base station.
//!
//! The crate is split into
//! - [`graph`]: the weighted environment graph and subgraph distances,
//! - [`likelihood`]: the event likelihood field and each agent's gated view of it,
//! - [`coverage`]: base-station state, the partition update and its timers,
//! - [`agent`]: planners and the per-agent motion protocol,
//! - [`sim`]: a deterministic discrete-event harness with metrics and exports,
//! - [`oracle`] and [`checks`]: brute-force references and runnable check suites.

pub mod agent;
pub mod checks;
pub mod coverage;
pub mod graph;
pub mod likelihood;
pub mod oracle;
pub mod sim;
pub mod vertex_set;

pub use graph::{Distance, EnvironmentGraph, VertexId};
pub use vertex_set::VertexSet;
