//! End-to-end acceptance checks, one line per criterion.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use resroute::generate::{all_connected, random_connected};
use resroute::impossibility::{
    check_bounce_backs, counterexample_topology, cyclic_orderings, refute_orderings, ScenarioSearch,
};
use resroute::{
    build_resilient, trace, verify_resilience, BuildMode, Dag, FailureScenario, ForwardingPattern,
    NextHop, NodeId, Outcome, PacketState, Topology,
};

const CORPUS_SEED: u64 = 0x5eed_0001;
const RANDOM_GRAPHS: usize = 500;
const CORPUS_LIMIT: Duration = Duration::from_secs(120);
const PROVE_LIMIT: Duration = Duration::from_secs(5);
const CORRUPTED_PATTERNS: usize = 100;
const FUZZ_TRIPLES: usize = 100_000;
const LARGE_BUILD_LIMIT: Duration = Duration::from_secs(1);
const LARGE_VERIFY_LIMIT: Duration = Duration::from_secs(30);

type Check = Result<String, String>;

fn random_corpus() -> Vec<Topology> {
    let mut rng = ChaCha8Rng::seed_from_u64(CORPUS_SEED);
    (0..RANDOM_GRAPHS)
        .map(|_| {
            let sources = rng.gen_range(3..=8);
            let max = ((sources + 1) * sources / 2).min(20);
            let edges = rng.gen_range(sources..=max);
            random_connected(sources, edges, rng.gen()).expect("feasible parameters")
        })
        .collect()
}

fn corpus() -> Vec<Topology> {
    let mut all = all_connected(3).unwrap();
    all.extend(all_connected(4).unwrap());
    all.extend(random_corpus());
    all
}

fn full_corpus() -> Vec<Topology> {
    let mut all = corpus();
    all.extend(all_connected(5).unwrap());
    all
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn criterion_1(corpus: &[Topology]) -> Check {
    let start = Instant::now();
    let bad: Vec<String> = corpus
        .par_iter()
        .filter_map(|t| {
            let failure = match build_resilient(t, BuildMode::Operational) {
                Err(e) => Some(format!("build error {e}")),
                Ok(b) => {
                    let r = verify_resilience(&b.pattern, t, 1).unwrap();
                    (!r.is_resilient()).then(|| format!("{} violations", r.violations.len()))
                }
            };
            failure.map(|f| format!("{f} on\n{}", t.format()))
        })
        .collect();
    let elapsed = start.elapsed();
    ensure(bad.is_empty(), || {
        format!("{} graphs fail, first: {}", bad.len(), bad[0])
    })?;
    ensure(elapsed < CORPUS_LIMIT, || format!("took {elapsed:.1?}"))?;
    Ok(format!(
        "{} graphs, 0 violations at t=1, {elapsed:.1?}",
        corpus.len()
    ))
}

fn criterion_2(corpus: &[Topology]) -> Check {
    let bad = corpus
        .par_iter()
        .filter(|t| {
            let p = ForwardingPattern::new(Dag::build(t).unwrap());
            !verify_resilience(&p, t, 0).unwrap().is_resilient()
        })
        .count();
    ensure(bad == 0, || format!("{bad} graphs undelivered with F=∅"))?;
    Ok(format!(
        "{} graphs, DAG-only pattern delivers everywhere at t=0",
        corpus.len()
    ))
}

fn hop_sequence(t: &Topology, path: &[resroute::Hop]) -> String {
    let mut names = vec![t.name(path[0].tail)];
    names.extend(path.iter().map(|h| t.name(h.head)));
    names.join("→")
}

fn criterion_3() -> Check {
    let start = Instant::now();
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = resroute::cli::run(
        ["resroute", "prove", "--builtin", "counterexample"],
        &mut out,
        &mut err,
    );
    let text = String::from_utf8(out).unwrap();
    ensure(code == 0, || {
        format!("prove exited {code}: {}", String::from_utf8_lossy(&err))
    })?;
    ensure(text.contains("6/6 orderings refuted"), || text.clone())?;

    let ce = counterexample_topology();
    let attempt =
        refute_orderings(&ce.topology, ce.hub, ScenarioSearch::Family(&ce.family)).unwrap();
    let elapsed = start.elapsed();
    ensure(attempt.is_complete() && attempt.entries.len() == 6, || {
        format!(
            "{} refuted, {} left",
            attempt.entries.len(),
            attempt.unrefuted.len()
        )
    })?;
    let entry = attempt
        .entries
        .iter()
        .find(|e| e.ordering.display(&ce.topology).to_string() == "(2,3,4,5)")
        .ok_or("no entry for (2,3,4,5)")?;
    let hops = hop_sequence(&ce.topology, &entry.trace.path);
    ensure(hops == "5→1→2→10→4→1→5→1", || {
        format!("trace {hops}")
    })?;
    let repeated = entry
        .trace
        .loop_edge()
        .map(|h| (ce.topology.name(h.tail), ce.topology.name(h.head)));
    ensure(repeated == Some(("5", "1")), || {
        format!("repeated hop {repeated:?}")
    })?;
    ensure(elapsed < PROVE_LIMIT, || format!("took {elapsed:.1?}"))?;
    Ok(format!(
        "6/6 orderings refuted, (2,3,4,5) trace {hops}, {elapsed:.1?}"
    ))
}

fn criterion_4(corpus: &[Topology]) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(CORPUS_SEED ^ 4);
    let mut witnesses = 0;
    let mut corrupted = 0;
    while corrupted < CORRUPTED_PATTERNS {
        let t = &corpus[rng.gen_range(0..corpus.len())];
        let mut p = build_resilient(t, BuildMode::Operational).unwrap().pattern;
        let sources: Vec<NodeId> = t.sources().collect();
        let v = sources[rng.gen_range(0..sources.len())];
        let nbrs: Vec<NodeId> = t.incident(v).iter().map(|&(n, _)| n).collect();
        let u = nbrs[rng.gen_range(0..nbrs.len())];
        if u == t.dest() || !p.install_override(t, v, u, u).unwrap() {
            continue;
        }
        corrupted += 1;
        for w in check_bounce_backs(t, &p) {
            witnesses += 1;
            let connected = t.connected_to_dest(&w.witness, w.u).unwrap();
            let r = trace(&p, t, &w.witness, w.u).unwrap();
            ensure(connected && !r.is_delivered(), || {
                format!(
                    "false witness u={} v={} F={} on\n{}",
                    t.name(w.u),
                    t.name(w.v),
                    w.witness.display(t),
                    t.format()
                )
            })?;
        }
    }
    ensure(witnesses > 0, || {
        "no corrupted pattern produced a witness".into()
    })?;

    let one_failure_losses: usize = corpus
        .par_iter()
        .map(|t| {
            let p = build_resilient(t, BuildMode::Operational).unwrap().pattern;
            check_bounce_backs(t, &p)
                .iter()
                .filter(|w| w.witness.len() <= 1)
                .count()
        })
        .sum();
    ensure(one_failure_losses == 0, || {
        format!("{one_failure_losses} single-failure witnesses on builder patterns")
    })?;
    Ok(format!(
        "{corrupted} corrupted patterns, {witnesses} witnesses all confirmed, 0 on builder patterns"
    ))
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

fn criterion_5() -> Check {
    for m in 1..=6usize {
        let neighbors: Vec<NodeId> = (1..=m).map(NodeId).collect();
        let got = cyclic_orderings(NodeId(0), &neighbors).map_err(|e| e.to_string())?;
        let expected: usize = (1..m).product();
        ensure(got.len() == expected, || {
            format!("m={m}: {} orderings", got.len())
        })?;
        if m <= 3 {
            let brute: BTreeSet<Vec<usize>> = permutations(&(1..=m).collect::<Vec<_>>())
                .into_iter()
                .map(|mut p| {
                    let k = p.iter().position(|&x| x == 1).unwrap();
                    p.rotate_left(k);
                    p
                })
                .collect();
            let ours: BTreeSet<Vec<usize>> = got
                .iter()
                .map(|o| o.cycle().iter().map(|n| n.index()).collect())
                .collect();
            ensure(ours == brute, || format!("m={m}: {ours:?} vs {brute:?}"))?;
        }
    }
    Ok("(m-1)! orderings for m=1..6, brute force agrees for m<=3".into())
}

/// Pattern with a few random extra rules so the fuzz also reaches loops and drops.
fn scrambled(t: &Topology, rng: &mut ChaCha8Rng) -> ForwardingPattern {
    let mode = if rng.gen() {
        BuildMode::Operational
    } else {
        BuildMode::Paper
    };
    let mut p = build_resilient(t, mode).unwrap().pattern;
    for _ in 0..rng.gen_range(0..4) {
        let nodes: Vec<NodeId> = t.sources().collect();
        let v = nodes[rng.gen_range(0..nodes.len())];
        let inc = t.incident(v);
        let from = inc[rng.gen_range(0..inc.len())].0;
        let to = inc[rng.gen_range(0..inc.len())].0;
        if rng.gen() {
            p.install_override(t, v, from, to).unwrap();
        } else {
            p.set_escape(t, v, to).unwrap();
        }
    }
    p
}

fn criterion_6(corpus: &[Topology]) -> Check {
    const PER_PATTERN: usize = 50;
    let mut rng = ChaCha8Rng::seed_from_u64(CORPUS_SEED ^ 6);
    let mut outcomes = [0usize; 3];
    let mut triples = 0;
    while triples < FUZZ_TRIPLES {
        let t = &corpus[rng.gen_range(0..corpus.len())];
        let p = scrambled(t, &mut rng);
        let sources: Vec<NodeId> = t.sources().collect();
        for _ in 0..PER_PATTERN {
            triples += 1;
            let density = rng.gen_range(0.0..0.6);
            let scenario =
                FailureScenario::from_failed(t.edge_ids().filter(|_| rng.gen_bool(density)));
            let source = sources[rng.gen_range(0..sources.len())];
            let r = trace(&p, t, &scenario, source).unwrap();
            let context = || {
                format!(
                    "source {} F={} on\n{}",
                    t.name(source),
                    scenario.display(t),
                    t.format()
                )
            };
            ensure(r.path.len() <= 2 * t.edge_count() + 1, || {
                format!("{} hops, {}", r.path.len(), context())
            })?;
            match r.outcome {
                Outcome::Delivered => {
                    outcomes[0] += 1;
                    let mut state = PacketState::origin(source);
                    for hop in &r.path {
                        ensure(state.node == hop.tail, context)?;
                        let next = p.eval_in(t, &scenario, state);
                        ensure(next == NextHop::Forward(hop.head), || {
                            format!("eval gave {next:?} at {}, {}", t.name(hop.tail), context())
                        })?;
                        state = PacketState::arrived(hop.head, hop.tail);
                    }
                    ensure(state.node == t.dest(), context)?;
                }
                Outcome::Dropped => outcomes[1] += 1,
                Outcome::Loop(_) => outcomes[2] += 1,
            }
        }
    }
    Ok(format!(
        "{triples} triples within 2|E|+1 hops ({} delivered and replayed, {} dropped, {} loops)",
        outcomes[0], outcomes[1], outcomes[2]
    ))
}

fn criterion_7() -> Check {
    let t = random_connected(99, 300, CORPUS_SEED).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let build = build_resilient(&t, BuildMode::Operational).map_err(|e| e.to_string())?;
    let build_time = start.elapsed();
    let start = Instant::now();
    let report = verify_resilience(&build.pattern, &t, 1).map_err(|e| e.to_string())?;
    let verify_time = start.elapsed();
    ensure(build_time < LARGE_BUILD_LIMIT, || {
        format!("build took {build_time:.2?}")
    })?;
    ensure(verify_time < LARGE_VERIFY_LIMIT, || {
        format!("verify took {verify_time:.2?}")
    })?;
    Ok(format!(
        "|V|={} |E|={}: build {build_time:.2?}, verify {} scenarios {verify_time:.2?}, {} violations",
        t.node_count(),
        t.edge_count(),
        report.scenarios_checked,
        report.violations.len()
    ))
}

fn criterion_8() -> Check {
    let t = Topology::parse("dest d\nedge 1 d\nedge 1 2\nedge 2 3\nedge 1 3\n").unwrap();
    let paper = build_resilient(&t, BuildMode::Paper).unwrap().pattern;
    let report = verify_resilience(&paper, &t, 1).unwrap();
    let found: Vec<(String, String)> = report
        .violations
        .iter()
        .map(|v| {
            (
                v.scenario.display(&t).to_string(),
                t.name(v.source).to_string(),
            )
        })
        .collect();
    ensure(found == [("{1-2}".to_string(), "2".to_string())], || {
        format!("paper mode violations {found:?}")
    })?;
    let ops = build_resilient(&t, BuildMode::Operational).unwrap().pattern;
    let report = verify_resilience(&ops, &t, 1).unwrap();
    ensure(report.is_resilient(), || {
        format!(
            "operational mode has {} violations",
            report.violations.len()
        )
    })?;
    Ok("paper mode fails only at F={1-2} source 2, operational mode passes".into())
}

fn main() -> ExitCode {
    let small = corpus();
    let full = full_corpus();
    let checks: Vec<(usize, Box<dyn Fn() -> Check + '_>)> = vec![
        (1, Box::new(|| criterion_1(&full))),
        (2, Box::new(|| criterion_2(&full))),
        (3, Box::new(criterion_3)),
        (4, Box::new(|| criterion_4(&full))),
        (5, Box::new(criterion_5)),
        (6, Box::new(|| criterion_6(&small))),
        (7, Box::new(criterion_7)),
        (8, Box::new(criterion_8)),
    ];
    let mut failed = 0;
    for (n, check) in checks {
        let result = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|e| Err(format!("panicked: {:?}", e.downcast_ref::<String>())));
        match result {
            Ok(msg) => println!("criterion {n}: PASS {msg}"),
            Err(msg) => {
                failed += 1;
                println!("criterion {n}: FAIL {msg}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
