//! Destination-rooted orientation of every edge, with per-node out-edge
//! priorities and the induced reachability order.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use thiserror::Error;

use crate::topology::{EdgeId, NodeId, Topology};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DagError {
    #[error("node `{0}` cannot reach the destination")]
    Unreachable(String),
    #[error("edge `{0}` is not oriented exactly once")]
    EdgeCoverage(String),
    #[error("`{from}` -> `{to}` is not an edge of the topology")]
    NotAnEdge { from: String, to: String },
    #[error("node `{0}` has no outgoing edge")]
    NoOutEdge(String),
    #[error("destination has outgoing edges")]
    DestinationHasOutEdge,
    #[error("orientation contains a directed cycle")]
    Cyclic,
}

/// Fixed-width bitset over node ids.
#[derive(Debug, Clone, PartialEq, Eq)]
struct NodeSet(Vec<u64>);

impl NodeSet {
    fn new(n: usize) -> Self {
        NodeSet(vec![0; n.div_ceil(64)])
    }

    fn insert(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn contains(&self, i: usize) -> bool {
        self.0[i / 64] & (1 << (i % 64)) != 0
    }

    fn union_with(&mut self, other: &NodeSet) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a |= *b;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dag {
    /// Per edge id: (tail, head).
    orientation: Vec<(NodeId, NodeId)>,
    out_priority: Vec<Vec<NodeId>>,
    in_neighbors: Vec<Vec<NodeId>>,
    bfs_dist: Vec<usize>,
    linearization: Vec<NodeId>,
    /// `descendants[j]` holds every node reachable from `j` by a non-empty path.
    descendants: Vec<NodeSet>,
}

fn bfs_distances(topology: &Topology) -> Result<Vec<usize>, DagError> {
    let mut dist = vec![usize::MAX; topology.node_count()];
    let mut queue = VecDeque::new();
    dist[topology.dest().index()] = 0;
    queue.push_back(topology.dest());
    while let Some(u) = queue.pop_front() {
        for &(v, _) in topology.incident(u) {
            if dist[v.index()] == usize::MAX {
                dist[v.index()] = dist[u.index()] + 1;
                queue.push_back(v);
            }
        }
    }
    if let Some(n) = topology.nodes().find(|n| dist[n.index()] == usize::MAX) {
        return Err(DagError::Unreachable(topology.name(n).to_string()));
    }
    Ok(dist)
}

impl Dag {
    /// BFS-layered orientation: every edge points from the endpoint with the
    /// larger `(distance, id)` to the smaller one.
    pub fn build(topology: &Topology) -> Result<Self, DagError> {
        let dist = bfs_distances(topology)?;
        let rank = |n: NodeId| (dist[n.index()], n);
        let mut out_priority = vec![Vec::new(); topology.node_count()];
        for e in topology.edge_ids() {
            let (u, v) = topology.endpoints(e);
            let (tail, head) = if rank(u) > rank(v) { (u, v) } else { (v, u) };
            out_priority[tail.index()].push(head);
        }
        for outs in &mut out_priority {
            outs.sort_by_key(|&n| rank(n));
        }
        Self::assemble(topology, out_priority, dist)
    }

    /// Rebuilds a DAG from explicit per-node out-neighbor priority lists,
    /// validating coverage, acyclicity and rootedness.
    pub fn from_priorities(
        topology: &Topology,
        out_priority: Vec<Vec<NodeId>>,
    ) -> Result<Self, DagError> {
        let dist = bfs_distances(topology)?;
        Self::assemble(topology, out_priority, dist)
    }

    fn assemble(
        topology: &Topology,
        mut out_priority: Vec<Vec<NodeId>>,
        bfs_dist: Vec<usize>,
    ) -> Result<Self, DagError> {
        let n = topology.node_count();
        out_priority.resize(n, Vec::new());
        let mut orientation: Vec<Option<(NodeId, NodeId)>> = vec![None; topology.edge_count()];
        let mut in_neighbors = vec![Vec::new(); n];
        for tail in topology.nodes() {
            for &head in &out_priority[tail.index()] {
                let e = topology
                    .edge_between(tail, head)
                    .ok_or_else(|| DagError::NotAnEdge {
                        from: topology.name(tail).to_string(),
                        to: topology.name(head).to_string(),
                    })?;
                if orientation[e.index()].replace((tail, head)).is_some() {
                    return Err(DagError::EdgeCoverage(topology.edge_label(e)));
                }
                in_neighbors[head.index()].push(tail);
            }
        }
        let orientation = orientation
            .into_iter()
            .enumerate()
            .map(|(e, o)| o.ok_or_else(|| DagError::EdgeCoverage(topology.edge_label(EdgeId(e)))))
            .collect::<Result<Vec<_>, _>>()?;
        if !out_priority[topology.dest().index()].is_empty() {
            return Err(DagError::DestinationHasOutEdge);
        }
        if let Some(s) = topology
            .sources()
            .find(|s| out_priority[s.index()].is_empty())
        {
            return Err(DagError::NoOutEdge(topology.name(s).to_string()));
        }

        // Kahn's algorithm from the sink, smallest (distance, id) first.
        let mut remaining: Vec<usize> = out_priority.iter().map(Vec::len).collect();
        let mut heap = BinaryHeap::new();
        for v in topology.nodes() {
            if remaining[v.index()] == 0 {
                heap.push(Reverse((bfs_dist[v.index()], v)));
            }
        }
        let mut linearization = Vec::with_capacity(n);
        while let Some(Reverse((_, v))) = heap.pop() {
            linearization.push(v);
            for &u in &in_neighbors[v.index()] {
                remaining[u.index()] -= 1;
                if remaining[u.index()] == 0 {
                    heap.push(Reverse((bfs_dist[u.index()], u)));
                }
            }
        }
        if linearization.len() != n {
            return Err(DagError::Cyclic);
        }

        let mut descendants = vec![NodeSet::new(n); n];
        for &j in &linearization {
            let mut set = NodeSet::new(n);
            for &x in &out_priority[j.index()] {
                set.insert(x.index());
                set.union_with(&descendants[x.index()]);
            }
            descendants[j.index()] = set;
        }

        Ok(Dag {
            orientation,
            out_priority,
            in_neighbors,
            bfs_dist,
            linearization,
            descendants,
        })
    }

    /// `(tail, head)` of the edge's directed form.
    pub fn orientation(&self, edge: EdgeId) -> (NodeId, NodeId) {
        self.orientation[edge.index()]
    }

    pub fn oriented_edges(&self) -> &[(NodeId, NodeId)] {
        &self.orientation
    }

    /// Out-neighbors of `node`, highest priority first.
    pub fn out_priority(&self, node: NodeId) -> &[NodeId] {
        &self.out_priority[node.index()]
    }

    pub fn in_neighbors(&self, node: NodeId) -> &[NodeId] {
        &self.in_neighbors[node.index()]
    }

    pub fn has_edge(&self, tail: NodeId, head: NodeId) -> bool {
        self.out_priority[tail.index()].contains(&head)
    }

    pub fn bfs_dist(&self, node: NodeId) -> usize {
        self.bfs_dist[node.index()]
    }

    /// Tie-break key used throughout: `(distance to destination, id)`.
    pub fn rank(&self, node: NodeId) -> (usize, NodeId) {
        (self.bfs_dist[node.index()], node)
    }

    /// `i <_D j`: a directed path from `j` to `i` exists. Irreflexive.
    pub fn precedes(&self, i: NodeId, j: NodeId) -> bool {
        self.descendants[j.index()].contains(i.index())
    }

    /// `i <=_D j`.
    pub fn precedes_or_eq(&self, i: NodeId, j: NodeId) -> bool {
        i == j || self.precedes(i, j)
    }

    /// Linear extension of `<_D`, destination first.
    pub fn topo_linearization(&self) -> &[NodeId] {
        &self.linearization
    }
}
