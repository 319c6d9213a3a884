//! Forwarding patterns as a three-layer rule structure.
//!
//! A node's forwarding function maps (incoming edge, live incident edges) to
//! an outgoing edge. Rather than tabulating that exponential domain, a
//! pattern stores:
//!
//! 1. the DAG priorities (first live out-edge wins),
//! 2. overrides keyed by the incoming directed edge `(node, from)`,
//! 3. a per-node escape edge used when no DAG out-edge is live.
//!
//! Evaluation precedence is override, then DAG, then escape, then drop.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::dag::Dag;
use crate::topology::{FailureScenario, NodeId, Topology};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PatternError {
    #[error("`{neighbor}` is not adjacent to `{node}`")]
    NotAdjacent { node: String, neighbor: String },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Arrival {
    /// The packet was created at this node.
    Origin,
    /// The packet arrived over the edge from this neighbor.
    From(NodeId),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct PacketState {
    pub node: NodeId,
    pub arrival: Arrival,
}

impl PacketState {
    pub fn origin(node: NodeId) -> Self {
        PacketState {
            node,
            arrival: Arrival::Origin,
        }
    }

    pub fn arrived(node: NodeId, from: NodeId) -> Self {
        PacketState {
            node,
            arrival: Arrival::From(from),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum NextHop {
    Forward(NodeId),
    Drop,
}

/// Which rule layer produced a forwarding decision.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Layer {
    Override,
    Dag,
    Escape,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForwardingPattern {
    dag: Dag,
    overrides: BTreeMap<(NodeId, NodeId), NodeId>,
    escape: BTreeMap<NodeId, NodeId>,
}

impl ForwardingPattern {
    /// Pure DAG routing with empty override and escape layers.
    pub fn new(dag: Dag) -> Self {
        ForwardingPattern {
            dag,
            overrides: BTreeMap::new(),
            escape: BTreeMap::new(),
        }
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    /// Overrides as `((node, from), to)`, sorted by key.
    pub fn overrides(&self) -> impl Iterator<Item = ((NodeId, NodeId), NodeId)> + '_ {
        self.overrides.iter().map(|(&k, &v)| (k, v))
    }

    pub fn override_for(&self, node: NodeId, from: NodeId) -> Option<NodeId> {
        self.overrides.get(&(node, from)).copied()
    }

    pub fn escapes(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.escape.iter().map(|(&k, &v)| (k, v))
    }

    pub fn escape(&self, node: NodeId) -> Option<NodeId> {
        self.escape.get(&node).copied()
    }

    pub fn override_count(&self) -> usize {
        self.overrides.len()
    }

    pub fn escape_count(&self) -> usize {
        self.escape.len()
    }

    /// Next hop for `state`; `live(neighbor)` reports whether the edge to
    /// that neighbor is up. Only neighbors of `state.node` are queried.
    pub fn eval<L: Fn(NodeId) -> bool>(&self, state: PacketState, live: L) -> NextHop {
        self.eval_layer(state, live)
            .map_or(NextHop::Drop, |(n, _)| NextHop::Forward(n))
    }

    pub fn eval_layer<L: Fn(NodeId) -> bool>(
        &self,
        state: PacketState,
        live: L,
    ) -> Option<(NodeId, Layer)> {
        if let Arrival::From(from) = state.arrival {
            if let Some(&to) = self.overrides.get(&(state.node, from)) {
                if live(to) {
                    return Some((to, Layer::Override));
                }
            }
        }
        if let Some(&next) = self.dag.out_priority(state.node).iter().find(|&&n| live(n)) {
            return Some((next, Layer::Dag));
        }
        match self.escape.get(&state.node) {
            Some(&to) if live(to) => Some((to, Layer::Escape)),
            _ => None,
        }
    }

    /// `eval` with liveness taken from a failure scenario.
    pub fn eval_in(
        &self,
        topology: &Topology,
        scenario: &FailureScenario,
        state: PacketState,
    ) -> NextHop {
        self.eval(state, |n| {
            topology
                .edge_between(state.node, n)
                .is_some_and(|e| scenario.is_live(e))
        })
    }

    fn check_adjacent(
        topology: &Topology,
        node: NodeId,
        neighbor: NodeId,
    ) -> Result<(), PatternError> {
        if topology.contains(node)
            && topology.contains(neighbor)
            && topology.adjacent(node, neighbor)
        {
            Ok(())
        } else {
            let name = |n: NodeId| {
                if topology.contains(n) {
                    topology.name(n).to_string()
                } else {
                    format!("#{}", n.index())
                }
            };
            Err(PatternError::NotAdjacent {
                node: name(node),
                neighbor: name(neighbor),
            })
        }
    }

    /// Write-once: returns `false` and leaves the pattern untouched when an
    /// entry for `(node, from)` already exists.
    pub fn install_override(
        &mut self,
        topology: &Topology,
        node: NodeId,
        from: NodeId,
        to: NodeId,
    ) -> Result<bool, PatternError> {
        Self::check_adjacent(topology, node, from)?;
        Self::check_adjacent(topology, node, to)?;
        if self.overrides.contains_key(&(node, from)) {
            return Ok(false);
        }
        self.overrides.insert((node, from), to);
        Ok(true)
    }

    /// Write-once, like [`install_override`](Self::install_override).
    pub fn set_escape(
        &mut self,
        topology: &Topology,
        node: NodeId,
        neighbor: NodeId,
    ) -> Result<bool, PatternError> {
        Self::check_adjacent(topology, node, neighbor)?;
        if self.escape.contains_key(&node) {
            return Ok(false);
        }
        self.escape.insert(node, neighbor);
        Ok(true)
    }

    /// Copy with the override layer removed.
    pub fn without_overrides(&self) -> Self {
        ForwardingPattern {
            overrides: BTreeMap::new(),
            ..self.clone()
        }
    }

    /// Copy with the escape layer removed.
    pub fn without_escapes(&self) -> Self {
        ForwardingPattern {
            escape: BTreeMap::new(),
            ..self.clone()
        }
    }
}
