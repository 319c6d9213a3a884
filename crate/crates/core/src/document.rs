//! JSON documents: pattern files, resilience reports and refutations.
//!
//! Schemas for all three live in `schemas/` at the crate root.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dag::{Dag, DagError};
use crate::impossibility::{RefutationAttempt, RefutationEntry};
use crate::pattern::{ForwardingPattern, PatternError};
use crate::simulate::{Hop, Outcome, TraceResult};
use crate::topology::{FailureScenario, NodeId, Topology};
use crate::verify::{ResilienceReport, ViolationKind};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const PATTERN_SCHEMA: &str = include_str!("../schemas/pattern.schema.json");
pub const REPORT_SCHEMA: &str = include_str!("../schemas/report.schema.json");
pub const REFUTATION_SCHEMA: &str = include_str!("../schemas/refutation.schema.json");

#[derive(Debug, Error)]
pub enum DocumentError {
    #[error("invalid pattern JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported schema version {0}")]
    SchemaVersion(u32),
    #[error("pattern was built for graph {expected}, this graph hashes to {found}")]
    HashMismatch { expected: String, found: String },
    #[error("pattern names unknown node `{0}`")]
    UnknownNode(String),
    #[error(transparent)]
    Dag(#[from] DagError),
    #[error(transparent)]
    Pattern(#[from] PatternError),
}

/// SHA-256 over the destination and the sorted edge list, so the hash does
/// not depend on declaration order.
pub fn graph_hash(topology: &Topology) -> String {
    let mut edges: Vec<(String, String)> = topology
        .edge_ids()
        .map(|e| {
            let (u, v) = topology.endpoints(e);
            let (a, b) = (topology.name(u), topology.name(v));
            if a <= b {
                (a.to_string(), b.to_string())
            } else {
                (b.to_string(), a.to_string())
            }
        })
        .collect();
    edges.sort();
    let mut hasher = Sha256::new();
    hasher.update(format!("dest {}\n", topology.name(topology.dest())));
    for (a, b) in edges {
        hasher.update(format!("edge {a} {b}\n"));
    }
    hex::encode(hasher.finalize())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverrideEntry {
    pub node: String,
    pub from: String,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub graph_hash: String,
    pub builder_mode: String,
    pub tool_version: String,
}

/// Serialized forwarding pattern.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternDocument {
    pub schema_version: u32,
    /// Node to out-neighbors, highest priority first.
    pub dag: BTreeMap<String, Vec<String>>,
    pub overrides: Vec<OverrideEntry>,
    pub escape: BTreeMap<String, String>,
    pub provenance: Provenance,
}

impl PatternDocument {
    pub fn export(topology: &Topology, pattern: &ForwardingPattern, builder_mode: &str) -> Self {
        let name = |n: NodeId| topology.name(n).to_string();
        let dag = topology
            .nodes()
            .map(|n| {
                let outs = pattern
                    .dag()
                    .out_priority(n)
                    .iter()
                    .map(|&o| name(o))
                    .collect();
                (name(n), outs)
            })
            .collect();
        let overrides = pattern
            .overrides()
            .map(|((node, from), to)| OverrideEntry {
                node: name(node),
                from: name(from),
                to: name(to),
            })
            .collect();
        let escape = pattern
            .escapes()
            .map(|(n, to)| (name(n), name(to)))
            .collect();
        PatternDocument {
            schema_version: SCHEMA_VERSION,
            dag,
            overrides,
            escape,
            provenance: Provenance {
                graph_hash: graph_hash(topology),
                builder_mode: builder_mode.to_string(),
                tool_version: TOOL_VERSION.to_string(),
            },
        }
    }

    /// Rebuilds the pattern against `topology`, refusing a graph-hash mismatch.
    pub fn import(&self, topology: &Topology) -> Result<ForwardingPattern, DocumentError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(DocumentError::SchemaVersion(self.schema_version));
        }
        let found = graph_hash(topology);
        if self.provenance.graph_hash != found {
            return Err(DocumentError::HashMismatch {
                expected: self.provenance.graph_hash.clone(),
                found,
            });
        }
        let node = |s: &str| {
            topology
                .node(s)
                .map_err(|_| DocumentError::UnknownNode(s.to_string()))
        };
        let mut priorities = vec![Vec::new(); topology.node_count()];
        for (n, outs) in &self.dag {
            priorities[node(n)?.index()] = outs
                .iter()
                .map(|o| node(o))
                .collect::<Result<Vec<_>, _>>()?;
        }
        let mut pattern = ForwardingPattern::new(Dag::from_priorities(topology, priorities)?);
        for o in &self.overrides {
            pattern.install_override(topology, node(&o.node)?, node(&o.from)?, node(&o.to)?)?;
        }
        for (n, to) in &self.escape {
            pattern.set_escape(topology, node(n)?, node(to)?)?;
        }
        Ok(pattern)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("pattern documents serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, DocumentError> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutcomeTag {
    Delivered,
    Dropped,
    Loop,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceDocument {
    pub outcome: OutcomeTag,
    pub path: Vec<[String; 2]>,
    pub loop_edge: Option<[String; 2]>,
}

fn hop_names(topology: &Topology, h: Hop) -> [String; 2] {
    [
        topology.name(h.tail).to_string(),
        topology.name(h.head).to_string(),
    ]
}

impl TraceDocument {
    pub fn new(topology: &Topology, trace: &TraceResult) -> Self {
        let (outcome, loop_edge) = match trace.outcome {
            Outcome::Delivered => (OutcomeTag::Delivered, None),
            Outcome::Dropped => (OutcomeTag::Dropped, None),
            Outcome::Loop(h) => (OutcomeTag::Loop, Some(hop_names(topology, h))),
        };
        TraceDocument {
            outcome,
            path: trace.path.iter().map(|&h| hop_names(topology, h)).collect(),
            loop_edge,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViolationDocument {
    pub scenario: Vec<String>,
    pub source: String,
    pub kind: String,
    pub trace: TraceDocument,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub t: usize,
    pub scenarios_checked: u64,
    pub violation_count: usize,
    pub violations: Vec<ViolationDocument>,
}

impl ReportDocument {
    pub fn new(topology: &Topology, report: &ResilienceReport) -> Self {
        ReportDocument {
            t: report.t,
            scenarios_checked: report.scenarios_checked,
            violation_count: report.violations.len(),
            violations: report
                .violations
                .iter()
                .map(|v| ViolationDocument {
                    scenario: v.scenario.labels(topology),
                    source: topology.name(v.source).to_string(),
                    kind: match v.kind {
                        ViolationKind::Undelivered => "undelivered",
                        ViolationKind::Loop => "loop",
                    }
                    .to_string(),
                    trace: TraceDocument::new(topology, &v.trace),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioDocument {
    pub failed: Vec<String>,
    pub surviving: Vec<String>,
}

impl ScenarioDocument {
    pub fn new(topology: &Topology, scenario: &FailureScenario) -> Self {
        ScenarioDocument {
            failed: scenario.labels(topology),
            surviving: topology
                .edge_ids()
                .filter(|&e| scenario.is_live(e))
                .map(|e| topology.edge_label(e))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefutationEntryDocument {
    pub ordering: Vec<String>,
    pub scenario: ScenarioDocument,
    pub source: String,
    pub trace: TraceDocument,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefutationDocument {
    pub hub: String,
    pub orderings_total: usize,
    pub complete: bool,
    pub refuted: Vec<RefutationEntryDocument>,
    pub unrefuted: Vec<Vec<String>>,
    pub conclusion: String,
}

fn names(topology: &Topology, nodes: &[NodeId]) -> Vec<String> {
    nodes
        .iter()
        .map(|&n| topology.name(n).to_string())
        .collect()
}

impl RefutationDocument {
    pub fn new(topology: &Topology, attempt: &RefutationAttempt) -> Self {
        let entry = |e: &RefutationEntry| RefutationEntryDocument {
            ordering: names(topology, e.ordering.cycle()),
            scenario: ScenarioDocument::new(topology, &e.scenario),
            source: topology.name(e.source).to_string(),
            trace: TraceDocument::new(topology, &e.trace),
        };
        RefutationDocument {
            hub: topology.name(attempt.hub).to_string(),
            orderings_total: attempt.entries.len() + attempt.unrefuted.len(),
            complete: attempt.is_complete(),
            refuted: attempt.entries.iter().map(entry).collect(),
            unrefuted: attempt
                .unrefuted
                .iter()
                .map(|o| names(topology, o.cycle()))
                .collect(),
            conclusion: conclusion(topology, attempt),
        }
    }
}

/// One-paragraph statement of what a refutation attempt establishes.
pub fn conclusion(topology: &Topology, attempt: &RefutationAttempt) -> String {
    let hub = topology.name(attempt.hub);
    let total = attempt.entries.len() + attempt.unrefuted.len();
    if attempt.is_complete() {
        format!(
            "A perfectly resilient pattern must route hub {hub} along one of its {total} cyclic \
             neighbor orderings, and nodes with at most two live edges have a single admissible \
             behavior. Every ordering is refuted by a scenario that keeps the source connected \
             yet forces a forwarding loop, so no perfectly resilient forwarding pattern exists \
             for this topology."
        )
    } else {
        format!(
            "{} of {total} cyclic orderings at hub {hub} could not be refuted; impossibility is \
             not established for this topology.",
            attempt.unrefuted.len()
        )
    }
}
