//! Seeded random and exhaustive generation of connected test topologies.
//!
//! Nodes are named `d` (the destination) and `1..=n`.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::topology::{FailureScenario, Topology};

/// Largest source count accepted by [`all_connected`].
pub const MAX_EXHAUSTIVE_SOURCES: usize = 5;

const MAX_ATTEMPTS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("need at least 2 source nodes, got {0}")]
    TooFewNodes(usize),
    #[error("{edges} edges impossible on {sources} sources plus dest (at most {max} edges)")]
    TooManyEdges {
        sources: usize,
        edges: usize,
        max: usize,
    },
    #[error("{edges} edges cannot connect {sources} sources plus dest (need at least {sources})")]
    TooFewEdges { sources: usize, edges: usize },
    #[error("exhaustive enumeration supports at most {MAX_EXHAUSTIVE_SOURCES} sources, got {0}")]
    TooLargeForEnumeration(usize),
    #[error("no connected sample after {MAX_ATTEMPTS} attempts")]
    Exhausted,
}

fn names(sources: usize) -> Vec<String> {
    std::iter::once("d".to_string())
        .chain((1..=sources).map(|i| i.to_string()))
        .collect()
}

/// All unordered node pairs over `d, 1..=n`, lexicographic by index.
fn pairs(sources: usize) -> Vec<(usize, usize)> {
    let n = sources + 1;
    (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .collect()
}

fn assemble(names: &[String], chosen: impl Iterator<Item = (usize, usize)>) -> Topology {
    let edges: Vec<(&str, &str)> = chosen
        .map(|(a, b)| (names[b].as_str(), names[a].as_str()))
        .collect();
    Topology::from_edges("d", &edges).expect("generated graphs are simple")
}

fn is_connected(topology: &Topology, node_total: usize) -> bool {
    topology.node_count() == node_total
        && topology
            .dest_component(&FailureScenario::none())
            .iter()
            .all(|&c| c)
}

/// A connected graph with `sources + 1` nodes and `edges` edges, drawn by
/// rejection sampling. Identical arguments give identical graphs.
pub fn random_connected(sources: usize, edges: usize, seed: u64) -> Result<Topology, GenError> {
    if sources < 2 {
        return Err(GenError::TooFewNodes(sources));
    }
    let all = pairs(sources);
    if edges > all.len() {
        return Err(GenError::TooManyEdges {
            sources,
            edges,
            max: all.len(),
        });
    }
    if edges < sources {
        return Err(GenError::TooFewEdges { sources, edges });
    }
    let names = names(sources);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_ATTEMPTS {
        let mut picked = sample(&mut rng, all.len(), edges).into_vec();
        picked.sort_unstable();
        let topology = assemble(&names, picked.into_iter().map(|i| all[i]));
        if is_connected(&topology, sources + 1) {
            return Ok(topology);
        }
    }
    Err(GenError::Exhausted)
}

/// Every connected labeled simple graph on `d, 1..=sources`, in edge-mask order.
pub fn all_connected(sources: usize) -> Result<Vec<Topology>, GenError> {
    if sources > MAX_EXHAUSTIVE_SOURCES {
        return Err(GenError::TooLargeForEnumeration(sources));
    }
    if sources == 0 {
        return Ok(Vec::new());
    }
    let all = pairs(sources);
    let names = names(sources);
    Ok((1u64..1 << all.len())
        .filter_map(|mask| {
            let chosen = (0..all.len())
                .filter(|&i| mask >> i & 1 == 1)
                .map(|i| all[i]);
            let topology = assemble(&names, chosen);
            is_connected(&topology, sources + 1).then_some(topology)
        })
        .collect())
}
