//! Construction of a 1-resilient forwarding pattern: DAG routing plus
//! iterative repair of problematic nodes along reversed DAG routes.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::dag::{Dag, DagError};
use crate::pattern::ForwardingPattern;
use crate::simulate::trace;
use crate::topology::{FailureScenario, NodeId, Topology};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BuildError {
    #[error(transparent)]
    Dag(#[from] DagError),
    #[error("no anchor node exists for problematic node `{0}`")]
    NoAnchor(String),
    #[error("safety cap of {0} repair iterations exceeded")]
    SafetyCap(usize),
}

/// Which nodes count as problematic during repair.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash)]
pub enum BuildMode {
    /// Some single-edge failure leaves the node connected but undelivered.
    #[default]
    Operational,
    /// As above, restricted to nodes bi-connected to the destination in `G`.
    Paper,
}

impl BuildMode {
    pub fn as_str(self) -> &'static str {
        match self {
            BuildMode::Operational => "operational",
            BuildMode::Paper => "paper",
        }
    }
}

impl fmt::Display for BuildMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BuildMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "operational" => Ok(BuildMode::Operational),
            "paper" => Ok(BuildMode::Paper),
            other => Err(format!("unknown builder mode `{other}`")),
        }
    }
}

/// One repair step: problematic node `i`, anchor `j`, diversion child `x`
/// and the DAG route `j = v_1, ..., v_k = i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepairPlan {
    pub problematic: NodeId,
    pub anchor: NodeId,
    pub diversion: NodeId,
    pub route: Vec<NodeId>,
}

/// Finished construction.
#[derive(Debug, Clone)]
pub struct Build {
    pub pattern: ForwardingPattern,
    pub mode: BuildMode,
    pub plans: Vec<RepairPlan>,
}

impl Build {
    pub fn iterations(&self) -> usize {
        self.plans.len()
    }
}

/// Caches the pattern-independent parts of the problematic-node test:
/// connectivity under every single-edge failure and bi-connectivity flags.
pub struct ProblemFinder<'a> {
    topology: &'a Topology,
    mode: BuildMode,
    /// `single_failure[e][n]`: `n` reaches the destination with only `e` failed.
    single_failure: Vec<Vec<bool>>,
    candidate: Vec<bool>,
}

impl<'a> ProblemFinder<'a> {
    pub fn new(topology: &'a Topology, mode: BuildMode) -> Self {
        let single_failure: Vec<Vec<bool>> = topology
            .edge_ids()
            .map(|e| topology.dest_component(&FailureScenario::single(e)))
            .collect();
        let connected = topology.dest_component(&FailureScenario::none());
        let candidate = topology
            .nodes()
            .map(|n| {
                n != topology.dest()
                    && match mode {
                        BuildMode::Operational => true,
                        BuildMode::Paper => {
                            connected[n.index()] && single_failure.iter().all(|c| c[n.index()])
                        }
                    }
            })
            .collect();
        ProblemFinder {
            topology,
            mode,
            single_failure,
            candidate,
        }
    }

    pub fn mode(&self) -> BuildMode {
        self.mode
    }

    /// Whether some single-edge failure leaves `node` connected but undelivered.
    ///
    /// A failure off the node's failure-free forwarding path cannot change any
    /// decision along that path (each decision picks a live edge that stays
    /// live), so only edges on that path need checking.
    pub fn is_problematic(&self, pattern: &ForwardingPattern, node: NodeId) -> bool {
        if !self.candidate[node.index()] {
            return false;
        }
        let base = trace(pattern, self.topology, &FailureScenario::none(), node)
            .expect("candidate is a valid source");
        let edges: BTreeSet<_> = if base.is_delivered() {
            base.path
                .iter()
                .map(|h| {
                    self.topology
                        .edge_between(h.tail, h.head)
                        .expect("hop is an edge")
                })
                .collect()
        } else {
            self.topology.edge_ids().collect()
        };
        edges.into_iter().any(|e| {
            self.single_failure[e.index()][node.index()]
                && !trace(pattern, self.topology, &FailureScenario::single(e), node)
                    .expect("candidate is a valid source")
                    .is_delivered()
        })
    }

    /// Earliest problematic node in the DAG's linearization.
    pub fn find(&self, pattern: &ForwardingPattern) -> Option<NodeId> {
        pattern
            .dag()
            .topo_linearization()
            .iter()
            .copied()
            .find(|&n| self.is_problematic(pattern, n))
    }
}

pub fn find_problematic(
    pattern: &ForwardingPattern,
    topology: &Topology,
    mode: BuildMode,
) -> Option<NodeId> {
    ProblemFinder::new(topology, mode).find(pattern)
}

/// Earliest `j` with `i <_D j` owning a DAG child `x` with `not (i <=_D x)`;
/// `x` is the earliest such child by `(distance, id)`.
pub fn find_anchor(dag: &Dag, i: NodeId) -> Option<(NodeId, NodeId)> {
    dag.topo_linearization()
        .iter()
        .copied()
        .filter(|&j| dag.precedes(i, j))
        .find_map(|j| {
            dag.out_priority(j)
                .iter()
                .copied()
                .filter(|&x| !dag.precedes_or_eq(i, x))
                .min_by_key(|&x| dag.rank(x))
                .map(|x| (j, x))
        })
}

/// Shortest directed route `j ⇝ i` in the DAG, preferring the earliest next
/// hop by `(distance, id)` at each step. Requires `i <_D j`.
pub fn select_route(dag: &Dag, j: NodeId, i: NodeId) -> Vec<NodeId> {
    let n = dag.topo_linearization().len();
    let mut to_i = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    to_i[i.index()] = 0;
    queue.push_back(i);
    while let Some(v) = queue.pop_front() {
        for &u in dag.in_neighbors(v) {
            if to_i[u.index()] == usize::MAX {
                to_i[u.index()] = to_i[v.index()] + 1;
                queue.push_back(u);
            }
        }
    }
    assert_ne!(to_i[j.index()], usize::MAX, "route requires i <_D j");
    let mut route = vec![j];
    let mut cur = j;
    while cur != i {
        cur = dag
            .out_priority(cur)
            .iter()
            .copied()
            .filter(|x| to_i[x.index()] == to_i[cur.index()] - 1)
            .min_by_key(|&x| dag.rank(x))
            .expect("shortest-path successor exists");
        route.push(cur);
    }
    route
}

/// Installs the escape edge at the problematic node and the reversed-route
/// overrides, stopping at the first pre-existing entry. If the whole route is
/// installed the anchor's entry diverts to `x`, unless one is already set.
pub fn install_chain(pattern: &mut ForwardingPattern, topology: &Topology, plan: &RepairPlan) {
    let route = &plan.route;
    let k = route.len();
    assert!(k >= 2, "repair route has at least one hop");
    // 1-indexed v_c == route[c - 1]
    let v = |c: usize| route[c - 1];
    pattern
        .set_escape(topology, plan.problematic, v(k - 1))
        .expect("route predecessor is adjacent");
    let mut c = k - 1;
    while c > 1 {
        let fresh = pattern
            .install_override(topology, v(c), v(c + 1), v(c - 1))
            .expect("route neighbors are adjacent");
        if !fresh {
            break;
        }
        c -= 1;
    }
    if c == 1 {
        pattern
            .install_override(topology, v(1), v(2), plan.diversion)
            .expect("anchor neighbors are adjacent");
    }
}

/// Full construction: DAG, DAG-priority rules, then repair until no node is
/// problematic.
pub fn build_resilient(topology: &Topology, mode: BuildMode) -> Result<Build, BuildError> {
    let dag = Dag::build(topology)?;
    let pattern = ForwardingPattern::new(dag);
    repair(topology, pattern, mode)
}

/// Runs the repair loop on an existing pattern.
pub fn repair(
    topology: &Topology,
    mut pattern: ForwardingPattern,
    mode: BuildMode,
) -> Result<Build, BuildError> {
    let finder = ProblemFinder::new(topology, mode);
    let cap = (topology.node_count() * topology.edge_count()).max(1);
    let mut plans: Vec<RepairPlan> = Vec::new();
    while let Some(i) = finder.find(&pattern) {
        if plans.len() >= cap {
            return Err(BuildError::SafetyCap(cap));
        }
        debug_assert!(
            plans.iter().all(|p| p.problematic != i),
            "node `{}` returned as problematic after being fixed",
            topology.name(i)
        );
        let dag = pattern.dag();
        let (j, x) = find_anchor(dag, i)
            .ok_or_else(|| BuildError::NoAnchor(topology.name(i).to_string()))?;
        let plan = RepairPlan {
            problematic: i,
            anchor: j,
            diversion: x,
            route: select_route(dag, j, i),
        };
        install_chain(&mut pattern, topology, &plan);
        plans.push(plan);
    }
    Ok(Build {
        pattern,
        mode,
        plans,
    })
}
