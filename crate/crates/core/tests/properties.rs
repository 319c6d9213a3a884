use proptest::prelude::*;
use resroute::generate::random_connected;
use resroute::impossibility::cyclic_orderings;
use resroute::pattern::Layer;
use resroute::{
    build_resilient, trace, BuildMode, Dag, FailureScenario, ForwardingPattern, NextHop, NodeId,
    Outcome, PacketState, Topology,
};

/// (sources, edges, seed) for a feasible connected graph.
fn graph_params() -> impl Strategy<Value = (usize, usize, u64)> {
    (2usize..9).prop_flat_map(|n| {
        let max = (n + 1) * n / 2;
        (Just(n), n..=max.min(20), any::<u64>())
    })
}

fn graph() -> impl Strategy<Value = Topology> {
    graph_params().prop_map(|(n, m, seed)| random_connected(n, m, seed).unwrap())
}

fn scenario_from_mask(t: &Topology, mask: u32) -> FailureScenario {
    FailureScenario::from_failed(t.edge_ids().filter(|e| mask >> (e.index() % 32) & 1 == 1))
}

/// Nodes reachable from `from` along oriented edges, by plain DFS.
fn reachable(dag: &Dag, t: &Topology, from: NodeId) -> Vec<bool> {
    let mut seen = vec![false; t.node_count()];
    let mut stack = vec![from];
    while let Some(n) = stack.pop() {
        for &m in dag.out_priority(n) {
            if !seen[m.index()] {
                seen[m.index()] = true;
                stack.push(m);
            }
        }
    }
    seen
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn dag_orients_every_edge_toward_dest(t in graph()) {
        let dag = Dag::build(&t).unwrap();
        let pos: Vec<usize> = {
            let mut pos = vec![0; t.node_count()];
            for (i, n) in dag.topo_linearization().iter().enumerate() {
                pos[n.index()] = i;
            }
            pos
        };
        prop_assert_eq!(dag.topo_linearization().len(), t.node_count());
        prop_assert_eq!(dag.topo_linearization()[0], t.dest());
        for e in t.edge_ids() {
            let (tail, head) = dag.orientation(e);
            let (a, b) = t.endpoints(e);
            prop_assert!((tail, head) == (a, b) || (tail, head) == (b, a));
            prop_assert!(!dag.has_edge(head, tail));
            prop_assert!(pos[head.index()] < pos[tail.index()]);
            prop_assert!(dag.rank(head) < dag.rank(tail));
        }
        for n in t.sources() {
            prop_assert!(!dag.out_priority(n).is_empty());
        }
        prop_assert!(dag.out_priority(t.dest()).is_empty());
    }

    #[test]
    fn precedes_matches_dfs(t in graph()) {
        let dag = Dag::build(&t).unwrap();
        for j in t.nodes() {
            let r = reachable(&dag, &t, j);
            for i in t.nodes() {
                prop_assert_eq!(dag.precedes(i, j), r[i.index()]);
            }
        }
    }

    #[test]
    fn eval_never_picks_a_dead_edge(t in graph(), mask in any::<u32>()) {
        let build = build_resilient(&t, BuildMode::Operational).unwrap();
        let scenario = scenario_from_mask(&t, mask);
        for node in t.nodes() {
            let mut states = vec![PacketState::origin(node)];
            states.extend(t.incident(node).iter().map(|&(nb, _)| PacketState::arrived(node, nb)));
            for s in states {
                if let NextHop::Forward(to) = build.pattern.eval_in(&t, &scenario, s) {
                    let e = t.edge_between(node, to);
                    prop_assert!(e.is_some_and(|e| scenario.is_live(e)));
                }
            }
        }
    }

    #[test]
    fn traces_are_bounded(t in graph(), mask in any::<u32>(), pick in any::<usize>()) {
        let p = build_resilient(&t, BuildMode::Paper).unwrap().pattern;
        let scenario = scenario_from_mask(&t, mask);
        let sources: Vec<NodeId> = t.sources().collect();
        let source = sources[pick % sources.len()];
        let r = trace(&p, &t, &scenario, source).unwrap();
        prop_assert!(r.path.len() <= 2 * t.edge_count() + 1);
        if let Outcome::Loop(h) = r.outcome {
            prop_assert_eq!(r.path.last().copied(), Some(h));
        }
    }

    #[test]
    fn builder_survives_single_failures_from_biconnected_nodes(t in graph()) {
        let p = build_resilient(&t, BuildMode::Operational).unwrap().pattern;
        for node in t.sources() {
            if !t.biconnected_to_dest(node).unwrap() {
                continue;
            }
            for e in t.edge_ids() {
                let f = FailureScenario::single(e);
                prop_assert!(t.connected_to_dest(&f, node).unwrap());
                prop_assert!(trace(&p, &t, &f, node).unwrap().is_delivered());
            }
        }
    }

    #[test]
    fn escapes_use_dag_in_edges(t in graph()) {
        let p = build_resilient(&t, BuildMode::Operational).unwrap().pattern;
        for (node, to) in p.escapes() {
            prop_assert!(p.dag().has_edge(to, node));
        }
    }

    #[test]
    fn format_round_trips(t in graph()) {
        let again = Topology::parse(&t.format()).unwrap();
        prop_assert_eq!(again.format(), t.format());
        prop_assert_eq!(again.edge_count(), t.edge_count());
    }

    #[test]
    fn dag_layer_matches_plain_dag_routing(t in graph(), mask in any::<u32>()) {
        let p = ForwardingPattern::new(Dag::build(&t).unwrap());
        let scenario = scenario_from_mask(&t, mask);
        for node in t.sources() {
            let first_live = p.dag().out_priority(node).iter().copied().find(|&n| {
                t.edge_between(node, n).is_some_and(|e| scenario.is_live(e))
            });
            let got = p.eval_layer(PacketState::origin(node), |n| {
                t.edge_between(node, n).is_some_and(|e| scenario.is_live(e))
            });
            prop_assert_eq!(got.map(|(h, _)| h), first_live);
        }
    }

    #[test]
    fn cyclic_ordering_count(m in 1usize..7) {
        let neighbors: Vec<NodeId> = (1..=m).map(NodeId).collect();
        let all = cyclic_orderings(NodeId(0), &neighbors).unwrap();
        let fact: usize = (1..m).product();
        prop_assert_eq!(all.len(), fact);
        for o in &all {
            prop_assert_eq!(o.cycle()[0], NodeId(1));
        }
    }
}

#[test]
fn eval_layer_reports_escape() {
    let t = Topology::parse("dest d\nedge 1 2\nedge 1 d\nedge 2 d\n").unwrap();
    let p = build_resilient(&t, BuildMode::Operational).unwrap().pattern;
    let one = t.node("1").unwrap();
    let d = t.dest();
    let got = p.eval_layer(PacketState::origin(one), |n| n != d);
    assert_eq!(got, Some((t.node("2").unwrap(), Layer::Escape)));
}
