//! Executable negative result: no forwarding pattern is perfectly resilient
//! on the counterexample network.
//!
//! A perfectly resilient pattern must route every node in the destination's
//! component along a cyclic ordering of its live neighbors, and must not
//! bounce a packet back when another way out exists. A node with one or two
//! live edges therefore has exactly one admissible behavior. The prover fixes
//! the hub's ordering, picks a scenario where every other node the packet
//! meets has at most two live edges, and shows the forced walk loops.

use std::fmt;

use thiserror::Error;

use crate::dag::Dag;
use crate::pattern::{Arrival, ForwardingPattern, NextHop, PacketState};
use crate::simulate::{trace, Forwarding, TraceResult};
use crate::topology::{EdgeId, FailureScenario, NodeId, Topology};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ImpossibilityError {
    #[error("cyclic ordering of an empty neighbor set")]
    EmptyNeighborSet,
    #[error("hub must not be the destination")]
    HubIsDest,
    #[error("hub edge `{edge}` fails in scenario #{scenario}")]
    HubEdgeFailed { scenario: usize, edge: String },
    #[error("search over {scenarios} scenarios exceeds the budget of {budget}")]
    BudgetExceeded { scenarios: u128, budget: u128 },
    #[error("{} of {} hub orderings not refuted", .0.unrefuted.len(), .0.unrefuted.len() + .0.entries.len())]
    IncompleteRefutation(Box<RefutationAttempt>),
}

/// Circular successor arrangement of a node's neighbors, stored rotated so
/// the smallest id comes first. Reflections are distinct orderings.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CyclicOrdering {
    pub node: NodeId,
    cycle: Vec<NodeId>,
}

impl CyclicOrdering {
    pub fn new(node: NodeId, mut cycle: Vec<NodeId>) -> Result<Self, ImpossibilityError> {
        let start = cycle
            .iter()
            .enumerate()
            .min_by_key(|(_, &n)| n)
            .map(|(i, _)| i)
            .ok_or(ImpossibilityError::EmptyNeighborSet)?;
        cycle.rotate_left(start);
        Ok(CyclicOrdering { node, cycle })
    }

    pub fn cycle(&self) -> &[NodeId] {
        &self.cycle
    }

    fn position(&self, neighbor: NodeId) -> Option<usize> {
        self.cycle.iter().position(|&n| n == neighbor)
    }

    pub fn successor(&self, neighbor: NodeId) -> Option<NodeId> {
        let i = self.position(neighbor)?;
        Some(self.cycle[(i + 1) % self.cycle.len()])
    }

    pub fn predecessor(&self, neighbor: NodeId) -> Option<NodeId> {
        let i = self.position(neighbor)?;
        Some(self.cycle[(i + self.cycle.len() - 1) % self.cycle.len()])
    }

    pub fn display<'a>(&'a self, topology: &'a Topology) -> OrderingDisplay<'a> {
        OrderingDisplay {
            ordering: self,
            topology,
        }
    }
}

pub struct OrderingDisplay<'a> {
    ordering: &'a CyclicOrdering,
    topology: &'a Topology,
}

impl fmt::Display for OrderingDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self
            .ordering
            .cycle
            .iter()
            .map(|&n| self.topology.name(n))
            .collect();
        write!(f, "({})", names.join(","))
    }
}

fn next_permutation(v: &mut [NodeId]) -> bool {
    let Some(i) = (1..v.len()).rev().find(|&i| v[i - 1] < v[i]) else {
        return false;
    };
    let j = (i..v.len())
        .rev()
        .find(|&j| v[j] > v[i - 1])
        .expect("pivot exists");
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// All `(m-1)!` canonical cyclic orderings of `neighbors`, in lexicographic order.
pub fn cyclic_orderings(
    node: NodeId,
    neighbors: &[NodeId],
) -> Result<Vec<CyclicOrdering>, ImpossibilityError> {
    let mut sorted = neighbors.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let (&first, rest) = sorted
        .split_first()
        .ok_or(ImpossibilityError::EmptyNeighborSet)?;
    let mut rest = rest.to_vec();
    let mut out = Vec::new();
    loop {
        let mut cycle = vec![first];
        cycle.extend_from_slice(&rest);
        out.push(CyclicOrdering { node, cycle });
        if !next_permutation(&mut rest) {
            break;
        }
    }
    Ok(out)
}

/// A pattern bouncing `u -> v` straight back although `v` has another way out.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BounceBackViolation {
    pub u: NodeId,
    pub v: NodeId,
    /// Every edge at `u` except `u-v` fails.
    pub witness: FailureScenario,
}

/// Reports every bounce-back that provably breaks delivery. Each witness is
/// re-traced before it is reported: `u` stays connected under it but the
/// packet from `u` is not delivered.
pub fn check_bounce_backs(
    topology: &Topology,
    pattern: &ForwardingPattern,
) -> Vec<BounceBackViolation> {
    let dest = topology.dest();
    let mut out = Vec::new();
    for e in topology.edge_ids() {
        let (a, b) = topology.endpoints(e);
        for (u, v) in [(a, b), (b, a)] {
            if u == dest || v == dest {
                continue;
            }
            if pattern.eval(PacketState::arrived(v, u), |_| true) != NextHop::Forward(u) {
                continue;
            }
            if !topology.dest_component(&FailureScenario::single(e))[v.index()] {
                continue;
            }
            let witness = FailureScenario::from_failed(
                topology
                    .incident(u)
                    .iter()
                    .map(|&(_, f)| f)
                    .filter(|&f| f != e),
            );
            let connected = topology.dest_component(&witness)[u.index()];
            let delivered = trace(pattern, topology, &witness, u)
                .expect("u is a source")
                .is_delivered();
            if connected && !delivered {
                out.push(BounceBackViolation { u, v, witness });
            }
        }
    }
    out
}

/// The reconstructed counterexample network and its scenario family.
#[derive(Debug, Clone)]
pub struct Counterexample {
    pub topology: Topology,
    pub hub: NodeId,
    pub family: Vec<FailureScenario>,
}

const SPOKES: [&str; 4] = ["2", "3", "4", "5"];

/// Connector node between two spokes. The 2-4 connector is node 10.
fn connector(a: &str, b: &str) -> &'static str {
    let (a, b) = if a < b { (a, b) } else { (b, a) };
    match (a, b) {
        ("2", "3") => "6",
        ("2", "5") => "7",
        ("3", "4") => "8",
        ("3", "5") => "9",
        ("2", "4") => "10",
        ("4", "5") => "11",
        _ => unreachable!("not a spoke pair"),
    }
}

/// Hub `1` joined to spokes `2..=5`; every spoke pair shares a private
/// connector node; every spoke links to `d`. 12 nodes, 20 edges.
///
/// The family holds, for each hub ordering `c` and pivot spoke `s` (taken
/// from the end of the cycle backwards), the scenario that keeps only the hub
/// edges, the connector path between `c(s)` and `c⁻¹(s)`, and the remaining
/// spoke's link to `d`.
pub fn counterexample_topology() -> Counterexample {
    let mut edges: Vec<(&str, &str)> = SPOKES.iter().map(|&s| ("1", s)).collect();
    for (a, b) in [
        ("2", "3"),
        ("2", "5"),
        ("3", "4"),
        ("3", "5"),
        ("2", "4"),
        ("4", "5"),
    ] {
        let c = connector(a, b);
        edges.push((a, c));
        edges.push((c, b));
    }
    edges.extend(SPOKES.iter().map(|&s| (s, "d")));
    let topology = Topology::from_edges("d", &edges).expect("counterexample is simple");
    let n = |s: &str| topology.node(s).expect("named node");
    let hub = n("1");
    let spokes: Vec<NodeId> = SPOKES.iter().map(|&s| n(s)).collect();

    let mut family: Vec<FailureScenario> = Vec::new();
    for ordering in cyclic_orderings(hub, &spokes).expect("four spokes") {
        for &pivot in ordering.cycle().iter().rev() {
            let after = ordering.successor(pivot).expect("pivot in cycle");
            let before = ordering.predecessor(pivot).expect("pivot in cycle");
            let rest = *spokes
                .iter()
                .find(|&&s| s != pivot && s != after && s != before)
                .expect("four distinct spokes");
            let c = n(connector(topology.name(after), topology.name(before)));
            let mut keep: Vec<EdgeId> = spokes
                .iter()
                .map(|&s| topology.edge_between(hub, s).expect("hub edge"))
                .collect();
            keep.push(topology.edge_between(after, c).expect("connector edge"));
            keep.push(topology.edge_between(c, before).expect("connector edge"));
            keep.push(
                topology
                    .edge_between(rest, topology.dest())
                    .expect("spoke edge"),
            );
            let scenario =
                FailureScenario::from_failed(topology.edge_ids().filter(|e| !keep.contains(e)));
            if !family.contains(&scenario) {
                family.push(scenario);
            }
        }
    }
    Counterexample {
        topology,
        hub,
        family,
    }
}

/// The only behavior a perfectly resilient pattern may exhibit under a given
/// scenario: the hub follows `ordering`, nodes with one live edge bounce,
/// nodes with two live edges pass through. Anything else is unforced and
/// drops, so a looping walk contains forced decisions only.
pub struct ForcedBehavior<'a> {
    pub topology: &'a Topology,
    pub ordering: &'a CyclicOrdering,
}

impl Forwarding for ForcedBehavior<'_> {
    fn next_hop(&self, state: PacketState, live: &dyn Fn(NodeId) -> bool) -> NextHop {
        let hub = self.ordering.node;
        if state.node == hub {
            return match state.arrival {
                Arrival::From(from) => self
                    .ordering
                    .successor(from)
                    .map_or(NextHop::Drop, NextHop::Forward),
                Arrival::Origin => NextHop::Drop,
            };
        }
        let up: Vec<NodeId> = self
            .topology
            .incident(state.node)
            .iter()
            .map(|&(n, _)| n)
            .filter(|&n| live(n))
            .collect();
        match (up.as_slice(), state.arrival) {
            ([only], _) => NextHop::Forward(*only),
            ([a, b], Arrival::From(from)) if from == *a => NextHop::Forward(*b),
            ([a, b], Arrival::From(from)) if from == *b => NextHop::Forward(*a),
            _ => NextHop::Drop,
        }
    }
}

/// One refuted hub ordering together with its replayable evidence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefutationEntry {
    pub ordering: CyclicOrdering,
    pub scenario: FailureScenario,
    pub source: NodeId,
    pub trace: TraceResult,
}

/// Outcome of refuting every admissible hub ordering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefutationAttempt {
    pub hub: NodeId,
    pub entries: Vec<RefutationEntry>,
    pub unrefuted: Vec<CyclicOrdering>,
}

impl RefutationAttempt {
    pub fn is_complete(&self) -> bool {
        self.unrefuted.is_empty()
    }
}

/// Every admissible hub ordering refuted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Refutation {
    pub hub: NodeId,
    pub entries: Vec<RefutationEntry>,
}

/// Where the prover looks for looping scenarios.
#[derive(Debug, Clone, Copy)]
pub enum ScenarioSearch<'a> {
    /// A supplied scenario family, tried in order.
    Family(&'a [FailureScenario]),
    /// Every subset of non-hub edges, bounded by a scenario budget.
    Exhaustive { budget: u128 },
}

/// First source (by id) whose forced walk under `scenario` loops while it is
/// connected to the destination.
fn looping_source(
    topology: &Topology,
    ordering: &CyclicOrdering,
    scenario: &FailureScenario,
) -> Option<(NodeId, TraceResult)> {
    let hub = ordering.node;
    let connected = topology.dest_component(scenario);
    if !connected[hub.index()] {
        return None;
    }
    let forced = ForcedBehavior { topology, ordering };
    topology
        .sources()
        .filter(|&s| s != hub && connected[s.index()])
        .filter(|&s| {
            topology
                .incident(s)
                .iter()
                .filter(|&&(_, e)| scenario.is_live(e))
                .count()
                == 1
        })
        .find_map(|s| {
            let result = trace(&forced, topology, scenario, s).expect("valid source");
            result.is_loop().then_some((s, result))
        })
}

fn check_hub(topology: &Topology, hub: NodeId) -> Result<(), ImpossibilityError> {
    if hub == topology.dest() {
        return Err(ImpossibilityError::HubIsDest);
    }
    if topology.degree(hub) == 0 {
        return Err(ImpossibilityError::EmptyNeighborSet);
    }
    Ok(())
}

fn free_edge_count(topology: &Topology, hub: NodeId) -> usize {
    topology.edge_count() - topology.degree(hub)
}

/// Searches all scenarios that keep the hub's edges up for one where the
/// forced walk from some source loops; scenarios are visited in increasing
/// bitmask order over the non-hub edges.
pub fn exhaustive_scenario_check(
    topology: &Topology,
    ordering: &CyclicOrdering,
    budget: u128,
) -> Result<Option<(FailureScenario, NodeId, TraceResult)>, ImpossibilityError> {
    let hub = ordering.node;
    check_hub(topology, hub)?;
    let free: Vec<EdgeId> = topology
        .edge_ids()
        .filter(|&e| {
            let (a, b) = topology.endpoints(e);
            a != hub && b != hub
        })
        .collect();
    let scenarios = 1u128.checked_shl(free.len() as u32).unwrap_or(u128::MAX);
    if scenarios > budget {
        return Err(ImpossibilityError::BudgetExceeded { scenarios, budget });
    }
    for mask in 0..scenarios {
        let scenario = FailureScenario::from_failed(
            free.iter()
                .enumerate()
                .filter(|&(i, _)| mask >> i & 1 == 1)
                .map(|(_, &e)| e),
        );
        if let Some((source, result)) = looping_source(topology, ordering, &scenario) {
            return Ok(Some((scenario, source, result)));
        }
    }
    Ok(None)
}

/// Tries to refute every cyclic ordering of the hub's neighbors.
pub fn refute_orderings(
    topology: &Topology,
    hub: NodeId,
    search: ScenarioSearch<'_>,
) -> Result<RefutationAttempt, ImpossibilityError> {
    check_hub(topology, hub)?;
    if let ScenarioSearch::Family(family) = search {
        for (i, s) in family.iter().enumerate() {
            if let Some(&(_, e)) = topology
                .incident(hub)
                .iter()
                .find(|&&(_, e)| s.is_failed(e))
            {
                return Err(ImpossibilityError::HubEdgeFailed {
                    scenario: i,
                    edge: topology.edge_label(e),
                });
            }
        }
    }
    if let ScenarioSearch::Exhaustive { budget } = search {
        let scenarios = 1u128
            .checked_shl(free_edge_count(topology, hub) as u32)
            .unwrap_or(u128::MAX);
        if scenarios > budget {
            return Err(ImpossibilityError::BudgetExceeded { scenarios, budget });
        }
    }
    let neighbors: Vec<NodeId> = topology.incident(hub).iter().map(|&(n, _)| n).collect();
    let mut entries = Vec::new();
    let mut unrefuted = Vec::new();
    for ordering in cyclic_orderings(hub, &neighbors)? {
        let found = match search {
            ScenarioSearch::Family(family) => family.iter().find_map(|s| {
                looping_source(topology, &ordering, s).map(|(src, tr)| (s.clone(), src, tr))
            }),
            ScenarioSearch::Exhaustive { budget } => {
                exhaustive_scenario_check(topology, &ordering, budget)?
            }
        };
        match found {
            Some((scenario, source, trace)) => entries.push(RefutationEntry {
                ordering,
                scenario,
                source,
                trace,
            }),
            None => unrefuted.push(ordering),
        }
    }
    Ok(RefutationAttempt {
        hub,
        entries,
        unrefuted,
    })
}

/// Shows that no pattern whose hub routes in a cyclic ordering survives every
/// scenario, i.e. that no perfectly resilient pattern exists on `topology`.
pub fn prove_impossibility(
    topology: &Topology,
    hub: NodeId,
    search: ScenarioSearch<'_>,
) -> Result<Refutation, ImpossibilityError> {
    let attempt = refute_orderings(topology, hub, search)?;
    if !attempt.is_complete() {
        return Err(ImpossibilityError::IncompleteRefutation(Box::new(attempt)));
    }
    Ok(Refutation {
        hub: attempt.hub,
        entries: attempt.entries,
    })
}

/// A concrete pattern exhibiting the forced behavior of `ordering` under
/// `scenario`, for replaying a refutation through the ordinary tracer.
pub fn forced_pattern(
    topology: &Topology,
    ordering: &CyclicOrdering,
    scenario: &FailureScenario,
) -> ForwardingPattern {
    let hub = ordering.node;
    let dag = Dag::build(topology).expect("counterexample topologies are connected");
    let mut pattern = ForwardingPattern::new(dag);
    for &from in ordering.cycle() {
        let to = ordering.successor(from).expect("in cycle");
        pattern
            .install_override(topology, hub, from, to)
            .expect("hub neighbors");
    }
    for node in topology.sources().filter(|&n| n != hub) {
        let up: Vec<NodeId> = topology
            .incident(node)
            .iter()
            .filter(|&&(_, e)| scenario.is_live(e))
            .map(|&(n, _)| n)
            .collect();
        match up.as_slice() {
            [only] => {
                pattern
                    .install_override(topology, node, *only, *only)
                    .expect("adjacent");
                pattern.set_escape(topology, node, *only).expect("adjacent");
            }
            [a, b] => {
                pattern
                    .install_override(topology, node, *a, *b)
                    .expect("adjacent");
                pattern
                    .install_override(topology, node, *b, *a)
                    .expect("adjacent");
            }
            _ => {}
        }
    }
    pattern
}
