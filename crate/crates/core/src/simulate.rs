//! Deterministic packet tracing with directed-hop loop detection.

use thiserror::Error;

use crate::pattern::{Arrival, ForwardingPattern, NextHop, PacketState};
use crate::topology::{FailureScenario, NodeId, Topology};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimulateError {
    #[error("unknown source node #{0}")]
    UnknownSource(usize),
    #[error("source is the destination")]
    SourceIsDest,
}

/// A directed traversal `tail -> head` of one edge.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Hop {
    pub tail: NodeId,
    pub head: NodeId,
}

impl Hop {
    pub fn new(tail: NodeId, head: NodeId) -> Self {
        Hop { tail, head }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Outcome {
    Delivered,
    Dropped,
    /// The packet is about to repeat a directed hop; carries that hop.
    Loop(Hop),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceResult {
    pub outcome: Outcome,
    pub path: Vec<Hop>,
}

impl TraceResult {
    pub fn is_delivered(&self) -> bool {
        self.outcome == Outcome::Delivered
    }

    pub fn is_loop(&self) -> bool {
        matches!(self.outcome, Outcome::Loop(_))
    }

    pub fn loop_edge(&self) -> Option<Hop> {
        match self.outcome {
            Outcome::Loop(h) => Some(h),
            _ => None,
        }
    }

    /// `5→1 1→2 ... Loop(5→1)` style rendering.
    pub fn render(&self, topology: &Topology) -> String {
        let hop = |h: &Hop| format!("{}→{}", topology.name(h.tail), topology.name(h.head));
        let mut parts: Vec<String> = self.path.iter().map(hop).collect();
        parts.push(match self.outcome {
            Outcome::Delivered => "Delivered".to_string(),
            Outcome::Dropped => "Dropped".to_string(),
            Outcome::Loop(h) => format!("Loop (repeated {})", hop(&h)),
        });
        parts.join(" ")
    }
}

/// Anything that can pick a next hop from a packet state and a liveness test.
pub trait Forwarding {
    fn next_hop(&self, state: PacketState, live: &dyn Fn(NodeId) -> bool) -> NextHop;
}

impl Forwarding for ForwardingPattern {
    fn next_hop(&self, state: PacketState, live: &dyn Fn(NodeId) -> bool) -> NextHop {
        self.eval(state, live)
    }
}

/// Follows `pattern` from `source` under `scenario`.
pub fn trace<F: Forwarding + ?Sized>(
    pattern: &F,
    topology: &Topology,
    scenario: &FailureScenario,
    source: NodeId,
) -> Result<TraceResult, SimulateError> {
    if !topology.contains(source) {
        return Err(SimulateError::UnknownSource(source.index()));
    }
    if source == topology.dest() {
        return Err(SimulateError::SourceIsDest);
    }
    // Slot 2e for the lower-id endpoint as tail, 2e+1 for the other.
    let mut seen = vec![false; 2 * topology.edge_count()];
    let mut path = Vec::new();
    let mut state = PacketState::origin(source);
    loop {
        let node = state.node;
        let live = |n: NodeId| {
            topology
                .edge_between(node, n)
                .is_some_and(|e| scenario.is_live(e))
        };
        let next = match pattern.next_hop(state, &live) {
            NextHop::Forward(next) if live(next) => next,
            _ => {
                return Ok(TraceResult {
                    outcome: Outcome::Dropped,
                    path,
                })
            }
        };
        let edge = topology
            .edge_between(node, next)
            .expect("live neighbor is adjacent");
        let slot = 2 * edge.index() + usize::from(node > next);
        let hop = Hop::new(node, next);
        path.push(hop);
        if seen[slot] {
            return Ok(TraceResult {
                outcome: Outcome::Loop(hop),
                path,
            });
        }
        seen[slot] = true;
        if next == topology.dest() {
            return Ok(TraceResult {
                outcome: Outcome::Delivered,
                path,
            });
        }
        state = PacketState {
            node: next,
            arrival: Arrival::From(node),
        };
    }
}
