//! Undirected network model with a single destination, failure scenarios and
//! the connectivity queries the rest of the crate is built on.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use thiserror::Error;

/// Dense node index, assigned in first-appearance order.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Dense edge index, assigned in declaration order.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeId(pub usize);

impl EdgeId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("missing `dest` line")]
    MissingDest,
    #[error("line {line}: second `dest` line")]
    DuplicateDest { line: usize },
    #[error("line {line}: self-loop at `{node}`")]
    SelfLoop { line: usize, node: String },
    #[error("line {line}: duplicate edge `{a}-{b}`")]
    DuplicateEdge { line: usize, a: String, b: String },
    #[error("line {line}: invalid node name `{name}` (must be non-empty without `-` or `,`)")]
    InvalidName { line: usize, name: String },
    #[error("line {line}: malformed line `{content}`")]
    Malformed { line: usize, content: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TopologyError {
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("unknown edge `{0}`")]
    UnknownEdge(String),
    #[error("malformed edge list `{0}`")]
    MalformedEdgeList(String),
}

/// Undirected simple graph `G = (V, E)` with a distinguished destination.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    names: Vec<String>,
    index: HashMap<String, NodeId>,
    dest: NodeId,
    /// Endpoints in declaration order.
    edges: Vec<(NodeId, NodeId)>,
    edge_index: HashMap<(NodeId, NodeId), EdgeId>,
    /// Per node: (neighbor, edge) in edge declaration order.
    adjacency: Vec<Vec<(NodeId, EdgeId)>>,
}

fn valid_name(name: &str) -> bool {
    !name.is_empty() && !name.contains(['-', ',']) && !name.chars().any(char::is_whitespace)
}

fn key(a: NodeId, b: NodeId) -> (NodeId, NodeId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Topology {
    /// Builds a topology from a destination name and an edge list. Nodes are
    /// numbered destination first, then in order of first appearance.
    pub fn from_edges<S: AsRef<str>>(dest: &str, edges: &[(S, S)]) -> Result<Self, ParseError> {
        let mut text = format!("dest {dest}\n");
        for (a, b) in edges {
            text.push_str(&format!("edge {} {}\n", a.as_ref(), b.as_ref()));
        }
        Self::parse(&text)
    }

    /// Parses the line-oriented graph format:
    ///
    /// ```text
    /// # comment
    /// dest <name>
    /// edge <name> <name>
    /// ```
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut names: Vec<String> = Vec::new();
        let mut index: HashMap<String, NodeId> = HashMap::new();
        let mut dest: Option<NodeId> = None;
        let mut edges: Vec<(NodeId, NodeId)> = Vec::new();
        let mut edge_index: HashMap<(NodeId, NodeId), EdgeId> = HashMap::new();

        let mut intern = |name: &str, line: usize| -> Result<NodeId, ParseError> {
            if !valid_name(name) {
                return Err(ParseError::InvalidName {
                    line,
                    name: name.to_string(),
                });
            }
            if let Some(&id) = index.get(name) {
                return Ok(id);
            }
            let id = NodeId(names.len());
            names.push(name.to_string());
            index.insert(name.to_string(), id);
            Ok(id)
        };

        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let tokens: Vec<&str> = trimmed.split_whitespace().collect();
            match tokens.as_slice() {
                ["dest", name] => {
                    if dest.is_some() {
                        return Err(ParseError::DuplicateDest { line });
                    }
                    dest = Some(intern(name, line)?);
                }
                ["edge", a, b] => {
                    if a == b {
                        return Err(ParseError::SelfLoop {
                            line,
                            node: a.to_string(),
                        });
                    }
                    let u = intern(a, line)?;
                    let v = intern(b, line)?;
                    let k = key(u, v);
                    if edge_index.contains_key(&k) {
                        return Err(ParseError::DuplicateEdge {
                            line,
                            a: a.to_string(),
                            b: b.to_string(),
                        });
                    }
                    edge_index.insert(k, EdgeId(edges.len()));
                    edges.push((u, v));
                }
                _ => {
                    return Err(ParseError::Malformed {
                        line,
                        content: trimmed.to_string(),
                    })
                }
            }
        }

        let dest = dest.ok_or(ParseError::MissingDest)?;
        let mut adjacency = vec![Vec::new(); names.len()];
        for (e, &(u, v)) in edges.iter().enumerate() {
            adjacency[u.0].push((v, EdgeId(e)));
            adjacency[v.0].push((u, EdgeId(e)));
        }
        Ok(Topology {
            names,
            index,
            dest,
            edges,
            edge_index,
            adjacency,
        })
    }

    /// Renders the topology back into the graph file format.
    pub fn format(&self) -> String {
        let mut out = format!("dest {}\n", self.name(self.dest));
        for &(u, v) in &self.edges {
            out.push_str(&format!("edge {} {}\n", self.name(u), self.name(v)));
        }
        out
    }

    pub fn dest(&self) -> NodeId {
        self.dest
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.names.len()).map(NodeId)
    }

    /// All nodes except the destination.
    pub fn sources(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes().filter(move |&n| n != self.dest)
    }

    pub fn edge_ids(&self) -> impl Iterator<Item = EdgeId> {
        (0..self.edges.len()).map(EdgeId)
    }

    pub fn name(&self, node: NodeId) -> &str {
        &self.names[node.0]
    }

    pub fn node(&self, name: &str) -> Result<NodeId, TopologyError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| TopologyError::UnknownNode(name.to_string()))
    }

    pub fn contains(&self, node: NodeId) -> bool {
        node.0 < self.names.len()
    }

    pub fn endpoints(&self, edge: EdgeId) -> (NodeId, NodeId) {
        self.edges[edge.0]
    }

    pub fn edge_between(&self, a: NodeId, b: NodeId) -> Option<EdgeId> {
        self.edge_index.get(&key(a, b)).copied()
    }

    pub fn adjacent(&self, a: NodeId, b: NodeId) -> bool {
        self.edge_between(a, b).is_some()
    }

    /// `(neighbor, edge)` pairs incident to `node`, i.e. `E_i`.
    pub fn incident(&self, node: NodeId) -> &[(NodeId, EdgeId)] {
        &self.adjacency[node.0]
    }

    pub fn degree(&self, node: NodeId) -> usize {
        self.adjacency[node.0].len()
    }

    pub fn edge_label(&self, edge: EdgeId) -> String {
        let (u, v) = self.endpoints(edge);
        format!("{}-{}", self.name(u), self.name(v))
    }

    /// Parses `u-v,x-y` into a failure scenario.
    pub fn parse_scenario(&self, list: &str) -> Result<FailureScenario, TopologyError> {
        let mut failed = BTreeSet::new();
        for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (a, b) = item
                .split_once('-')
                .ok_or_else(|| TopologyError::MalformedEdgeList(item.to_string()))?;
            let u = self.node(a)?;
            let v = self.node(b)?;
            let e = self
                .edge_between(u, v)
                .ok_or_else(|| TopologyError::UnknownEdge(item.to_string()))?;
            failed.insert(e);
        }
        Ok(FailureScenario { failed })
    }

    /// Marks every node in the destination's component of `H^F`.
    pub fn dest_component(&self, scenario: &FailureScenario) -> Vec<bool> {
        let mut seen = vec![false; self.node_count()];
        let mut queue = VecDeque::new();
        seen[self.dest.0] = true;
        queue.push_back(self.dest);
        while let Some(u) = queue.pop_front() {
            for &(v, e) in self.incident(u) {
                if !seen[v.0] && scenario.is_live(e) {
                    seen[v.0] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    }

    /// Whether `node` still has a route to the destination in `H^F`.
    pub fn connected_to_dest(
        &self,
        scenario: &FailureScenario,
        node: NodeId,
    ) -> Result<bool, TopologyError> {
        if !self.contains(node) {
            return Err(TopologyError::UnknownNode(format!("#{}", node.0)));
        }
        Ok(self.dest_component(scenario)[node.0])
    }

    pub fn is_connected(&self) -> bool {
        self.dest_component(&FailureScenario::none())
            .iter()
            .all(|&c| c)
    }

    /// Whether no single edge removal separates `node` from the destination.
    /// Checked directly: one connectivity search per edge.
    pub fn biconnected_to_dest(&self, node: NodeId) -> Result<bool, TopologyError> {
        if !self.contains(node) {
            return Err(TopologyError::UnknownNode(format!("#{}", node.0)));
        }
        if !self.dest_component(&FailureScenario::none())[node.0] {
            return Ok(false);
        }
        Ok(self
            .edge_ids()
            .all(|e| self.dest_component(&FailureScenario::single(e))[node.0]))
    }
}

/// A set of simultaneously failed edges `F`. The surviving graph is implied.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FailureScenario {
    failed: BTreeSet<EdgeId>,
}

impl FailureScenario {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn single(edge: EdgeId) -> Self {
        Self {
            failed: BTreeSet::from([edge]),
        }
    }

    pub fn from_failed<I: IntoIterator<Item = EdgeId>>(edges: I) -> Self {
        Self {
            failed: edges.into_iter().collect(),
        }
    }

    pub fn is_live(&self, edge: EdgeId) -> bool {
        !self.failed.contains(&edge)
    }

    pub fn is_failed(&self, edge: EdgeId) -> bool {
        self.failed.contains(&edge)
    }

    pub fn failed(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.failed.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.failed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.failed.is_empty()
    }

    pub fn display<'a>(&'a self, topology: &'a Topology) -> ScenarioDisplay<'a> {
        ScenarioDisplay {
            scenario: self,
            topology,
        }
    }

    /// Edge labels `u-v` in edge-id order.
    pub fn labels(&self, topology: &Topology) -> Vec<String> {
        self.failed
            .iter()
            .map(|&e| topology.edge_label(e))
            .collect()
    }
}

pub struct ScenarioDisplay<'a> {
    scenario: &'a FailureScenario,
    topology: &'a Topology,
}

impl fmt::Display for ScenarioDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.scenario.labels(self.topology).join(","))
    }
}
