//! Resilient routing tables: forwarding patterns with embedded failover rules.
//!
//! * [`topology`]: the network graph, failure scenarios and connectivity.
//! * [`dag`]: destination-rooted edge orientation and its partial order.
//! * [`pattern`]: the layered forwarding-rule representation and evaluation.
//! * [`builder`]: construction of 1-resilient patterns.
//! * [`simulate`]: packet tracing with directed-hop loop detection.
//! * [`verify`]: exhaustive t-resilience checking.
//! * [`impossibility`]: executable refutation of perfect resilience.
//! * [`document`]: JSON file formats.
//! * [`cli`]: the `resroute` command implementations.

pub mod builder;
pub mod cli;
pub mod dag;
pub mod document;
pub mod generate;
pub mod impossibility;
pub mod pattern;
pub mod simulate;
pub mod topology;
pub mod verify;

pub use builder::{build_resilient, Build, BuildError, BuildMode, RepairPlan};
pub use dag::{Dag, DagError};
pub use pattern::{Arrival, ForwardingPattern, NextHop, PacketState};
pub use simulate::{trace, Hop, Outcome, TraceResult};
pub use topology::{EdgeId, FailureScenario, NodeId, ParseError, Topology};
pub use verify::{verify_resilience, ResilienceReport, Violation, ViolationKind};
