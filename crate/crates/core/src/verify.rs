//! Exhaustive t-resilience checking. Uses only tracing and connectivity, so it
//! serves as an oracle independent of how a pattern was built.

use rayon::prelude::*;
use thiserror::Error;

use crate::pattern::ForwardingPattern;
use crate::simulate::{trace, TraceResult};
use crate::topology::{EdgeId, FailureScenario, NodeId, Topology};

/// Default cap on scenario-source pairs.
pub const DEFAULT_BUDGET: u128 = 10_000_000;

const CHUNK: usize = 2048;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error("{pairs} scenario-source pairs exceed the budget of {budget}")]
    BudgetExceeded { pairs: u128, budget: u128 },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum ViolationKind {
    /// Connected to the destination, but the packet did not arrive.
    Undelivered,
    /// The forwarding path repeats a directed hop.
    Loop,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub scenario: FailureScenario,
    pub source: NodeId,
    pub trace: TraceResult,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResilienceReport {
    pub t: usize,
    pub scenarios_checked: u64,
    pub violations: Vec<Violation>,
}

impl ResilienceReport {
    pub fn is_resilient(&self) -> bool {
        self.violations.is_empty()
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

/// `sum_{s=0..t} C(edges, s)`.
pub fn scenario_count(edges: usize, t: usize) -> u128 {
    (0..=t.min(edges))
        .map(|s| binomial(edges as u128, s as u128))
        .sum()
}

/// All edge subsets of size `0..=t`, by size, then lexicographic in edge id.
pub fn enumerate_failure_scenarios(
    topology: &Topology,
    t: usize,
) -> impl Iterator<Item = FailureScenario> {
    let m = topology.edge_count();
    (0..=t.min(m)).flat_map(move |size| Combinations::new(m, size))
}

/// Lexicographic k-subsets of `0..n`.
struct Combinations {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Combinations {
    fn new(n: usize, k: usize) -> Self {
        Combinations {
            n,
            current: (k <= n).then(|| (0..k).collect()),
        }
    }
}

impl Iterator for Combinations {
    type Item = FailureScenario;

    fn next(&mut self) -> Option<FailureScenario> {
        let cur = self.current.as_mut()?;
        let out = FailureScenario::from_failed(cur.iter().map(|&e| EdgeId(e)));
        let k = cur.len();
        match (0..k).rev().find(|&i| cur[i] < self.n - k + i) {
            Some(i) => {
                cur[i] += 1;
                for j in i + 1..k {
                    cur[j] = cur[j - 1] + 1;
                }
            }
            None => self.current = None,
        }
        Some(out)
    }
}

fn check_scenario(
    pattern: &ForwardingPattern,
    topology: &Topology,
    scenario: &FailureScenario,
) -> Vec<Violation> {
    let connected = topology.dest_component(scenario);
    topology
        .sources()
        .filter_map(|source| {
            let result = trace(pattern, topology, scenario, source).expect("valid source");
            let kind = if result.is_loop() {
                ViolationKind::Loop
            } else if connected[source.index()] && !result.is_delivered() {
                ViolationKind::Undelivered
            } else {
                return None;
            };
            Some(Violation {
                scenario: scenario.clone(),
                source,
                trace: result,
                kind,
            })
        })
        .collect()
}

pub fn verify_resilience(
    pattern: &ForwardingPattern,
    topology: &Topology,
    t: usize,
) -> Result<ResilienceReport, VerifyError> {
    verify_resilience_with_budget(pattern, topology, t, DEFAULT_BUDGET)
}

/// Checks every scenario with at most `t` failures from every source:
/// connected sources must be delivered, and no source may loop.
pub fn verify_resilience_with_budget(
    pattern: &ForwardingPattern,
    topology: &Topology,
    t: usize,
    budget: u128,
) -> Result<ResilienceReport, VerifyError> {
    let scenarios = scenario_count(topology.edge_count(), t);
    let pairs = scenarios * topology.sources().count() as u128;
    if pairs > budget {
        return Err(VerifyError::BudgetExceeded { pairs, budget });
    }
    let mut violations = Vec::new();
    let mut iter = enumerate_failure_scenarios(topology, t).peekable();
    while iter.peek().is_some() {
        let chunk: Vec<FailureScenario> = iter.by_ref().take(CHUNK).collect();
        let found: Vec<Vec<Violation>> = chunk
            .par_iter()
            .map(|s| check_scenario(pattern, topology, s))
            .collect();
        violations.extend(found.into_iter().flatten());
    }
    Ok(ResilienceReport {
        t,
        scenarios_checked: scenarios as u64,
        violations,
    })
}
