//! `resroute` subcommands.
//!
//! Exit codes: 0 success or property holds, 1 property fails, 2 input or
//! budget error, 3 internal builder diagnostic.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::builder::{build_resilient, BuildError, BuildMode};
use crate::dag::DagError;
use crate::document::{PatternDocument, RefutationDocument, ReportDocument, TraceDocument};
use crate::generate::{all_connected, random_connected};
use crate::impossibility::{
    counterexample_topology, forced_pattern, refute_orderings, ImpossibilityError,
    RefutationAttempt, ScenarioSearch,
};
use crate::simulate::{trace, Outcome};
use crate::topology::Topology;
use crate::verify::{verify_resilience_with_budget, ViolationKind, DEFAULT_BUDGET};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILS: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

/// Largest hub degree `prove` accepts; orderings grow as `(deg - 1)!`.
pub const MAX_HUB_DEGREE: usize = 7;

/// Default per-ordering scenario budget for exhaustive refutation search.
pub const DEFAULT_PROVE_BUDGET: u128 = 1 << 20;

#[derive(Debug, Parser)]
#[command(
    name = "resroute",
    version,
    about = "Resilient routing tables: build, verify, trace, prove"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a forwarding pattern for a graph.
    Build(BuildArgs),
    /// Exhaustively check t-resilience of a pattern.
    Verify(VerifyArgs),
    /// Trace a single packet under a failure scenario.
    Trace(TraceArgs),
    /// Refute perfect resilience at a hub node.
    Prove(ProveArgs),
    /// Generate graph files.
    Gen(GenArgs),
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    pub graph: PathBuf,
    #[arg(long, default_value = "operational")]
    pub mode: BuildMode,
    /// Write the pattern here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub graph: PathBuf,
    #[arg(long)]
    pub pattern: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub t: usize,
    #[arg(long)]
    pub json: bool,
    /// Scenario-source pair budget.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: u128,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    pub graph: PathBuf,
    #[arg(long)]
    pub pattern: PathBuf,
    /// Failed edges, `u-v,x-y`.
    #[arg(long, default_value = "")]
    pub fail: String,
    #[arg(long)]
    pub from: String,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ProveArgs {
    /// Graph file (requires --hub).
    #[arg(required_unless_present = "builtin", conflicts_with = "builtin")]
    pub graph: Option<PathBuf>,
    #[arg(long, requires = "graph")]
    pub hub: Option<String>,
    /// Built-in topology; only `counterexample` exists.
    #[arg(long, value_parser = ["counterexample"])]
    pub builtin: Option<String>,
    #[arg(long)]
    pub json: bool,
    /// Per-ordering scenario budget for exhaustive search.
    #[arg(long, default_value_t = DEFAULT_PROVE_BUDGET)]
    pub budget: u128,
    /// Write the graph plus one replayable pattern per refuted ordering here.
    #[arg(long)]
    pub fixtures: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct GenMode {
    /// N source nodes, M edges.
    #[arg(long, num_args = 2, value_names = ["N", "M"], requires = "seed")]
    pub random: Option<Vec<usize>>,
    /// Every connected graph on N sources plus the destination.
    #[arg(long, value_name = "N")]
    pub all_connected: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub mode: GenMode,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write one file per graph into this directory.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Build(a) => cmd_build(&a, out, err),
        Command::Verify(a) => cmd_verify(&a, out),
        Command::Trace(a) => cmd_trace(&a, out),
        Command::Prove(a) => cmd_prove(&a, out),
        Command::Gen(a) => cmd_gen(&a, out),
    };
    match result {
        Ok(code) => code,
        Err(Failure(code, message)) => {
            let _ = writeln!(err, "error: {message}");
            code
        }
    }
}

/// Exit code plus message.
#[derive(Debug)]
pub struct Failure(pub i32, pub String);

type CmdResult = Result<i32, Failure>;

fn input<E: std::fmt::Display>(e: E) -> Failure {
    Failure(EXIT_INPUT, e.to_string())
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure(EXIT_INPUT, format!("{}: {e}", path.display()))
}

fn emit(out: &mut dyn Write, text: &str) -> CmdResult {
    out.write_all(text.as_bytes())
        .map_err(|e| Failure(EXIT_INPUT, format!("write failed: {e}")))?;
    Ok(EXIT_OK)
}

fn read_graph(path: &Path) -> Result<Topology, Failure> {
    let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    Topology::parse(&text).map_err(|e| Failure(EXIT_INPUT, format!("{}: {e}", path.display())))
}

fn read_pattern(
    path: &Path,
    topology: &Topology,
) -> Result<crate::pattern::ForwardingPattern, Failure> {
    let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    PatternDocument::from_json(&text)
        .and_then(|d| d.import(topology))
        .map_err(|e| Failure(EXIT_INPUT, format!("{}: {e}", path.display())))
}

fn plural(n: usize, word: &str) -> String {
    if n == 1 {
        format!("{n} {word}")
    } else {
        format!("{n} {word}s")
    }
}

pub fn cmd_build(args: &BuildArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let topology = read_graph(&args.graph)?;
    let build = build_resilient(&topology, args.mode).map_err(|e| match e {
        BuildError::Dag(DagError::Unreachable(n)) => Failure(
            EXIT_INPUT,
            format!("graph is disconnected: node `{n}` cannot reach the destination"),
        ),
        BuildError::Dag(other) => input(other),
        other => Failure(EXIT_INTERNAL, other.to_string()),
    })?;
    let doc = PatternDocument::export(&topology, &build.pattern, args.mode.as_str());
    let summary = format!(
        "{} nodes, {} edges, mode {}\n{}, {}, {}\n",
        topology.node_count(),
        topology.edge_count(),
        args.mode,
        plural(build.pattern.override_count(), "override"),
        plural(build.pattern.escape_count(), "escape"),
        plural(build.iterations(), "iteration"),
    );
    let mut summary_sink: &mut dyn Write = match &args.out {
        Some(path) => {
            fs::write(path, doc.to_json() + "\n").map_err(|e| io_failure(path, e))?;
            out
        }
        None => {
            emit(out, &(doc.to_json() + "\n"))?;
            err
        }
    };
    emit(&mut summary_sink, &summary)?;
    // Advisory t=1 check; skipped silently when it would be too large.
    if let Ok(report) = verify_resilience_with_budget(&build.pattern, &topology, 1, DEFAULT_BUDGET)
    {
        if !report.is_resilient() {
            emit(
                &mut summary_sink,
                &format!(
                    "warning: pattern fails t=1 verification with {}\n",
                    plural(report.violations.len(), "violation")
                ),
            )?;
        }
    }
    Ok(EXIT_OK)
}

pub fn cmd_verify(args: &VerifyArgs, out: &mut dyn Write) -> CmdResult {
    let topology = read_graph(&args.graph)?;
    let pattern = read_pattern(&args.pattern, &topology)?;
    let report =
        verify_resilience_with_budget(&pattern, &topology, args.t, args.budget).map_err(input)?;
    if args.json {
        let doc = ReportDocument::new(&topology, &report);
        emit(
            out,
            &(serde_json::to_string_pretty(&doc).expect("serializable") + "\n"),
        )?;
    } else {
        let mut text = format!(
            "t={}: {}, {}\n",
            report.t,
            plural(report.scenarios_checked as usize, "scenario"),
            plural(report.violations.len(), "violation")
        );
        for v in &report.violations {
            let kind = match v.kind {
                ViolationKind::Undelivered => "undelivered",
                ViolationKind::Loop => "loop",
            };
            text.push_str(&format!(
                "violation: F={} source {} {kind}: {}\n",
                v.scenario.display(&topology),
                topology.name(v.source),
                v.trace.render(&topology)
            ));
        }
        emit(out, &text)?;
    }
    Ok(if report.is_resilient() {
        EXIT_OK
    } else {
        EXIT_FAILS
    })
}

pub fn cmd_trace(args: &TraceArgs, out: &mut dyn Write) -> CmdResult {
    let topology = read_graph(&args.graph)?;
    let pattern = read_pattern(&args.pattern, &topology)?;
    let scenario = topology.parse_scenario(&args.fail).map_err(input)?;
    let source = topology.node(&args.from).map_err(input)?;
    let result = trace(&pattern, &topology, &scenario, source).map_err(input)?;
    let connected = topology.dest_component(&scenario)[source.index()];
    if args.json {
        let doc = TraceDocument::new(&topology, &result);
        emit(
            out,
            &(serde_json::to_string_pretty(&doc).expect("serializable") + "\n"),
        )?;
    } else {
        let mut line = result.render(&topology);
        if result.outcome == Outcome::Dropped {
            line.push_str(if connected {
                " (source connected)"
            } else {
                " (source disconnected)"
            });
        }
        emit(out, &(line + "\n"))?;
    }
    Ok(match result.outcome {
        Outcome::Delivered => EXIT_OK,
        Outcome::Loop(_) => EXIT_FAILS,
        Outcome::Dropped if connected => EXIT_FAILS,
        Outcome::Dropped => EXIT_OK,
    })
}

fn write_fixtures(
    dir: &Path,
    topology: &Topology,
    attempt: &RefutationAttempt,
) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
    let graph = dir.join("graph.txt");
    fs::write(&graph, topology.format()).map_err(|e| io_failure(&graph, e))?;
    let mut index = String::new();
    for (k, entry) in attempt.entries.iter().enumerate() {
        let pattern = forced_pattern(topology, &entry.ordering, &entry.scenario);
        let doc = PatternDocument::export(topology, &pattern, "fixture");
        let name = format!("ordering_{}.pattern.json", k + 1);
        let path = dir.join(&name);
        fs::write(&path, doc.to_json() + "\n").map_err(|e| io_failure(&path, e))?;
        index.push_str(&format!(
            "{name} --fail {} --from {}\n",
            entry.scenario.labels(topology).join(","),
            topology.name(entry.source)
        ));
    }
    let path = dir.join("fixtures.txt");
    fs::write(&path, index).map_err(|e| io_failure(&path, e))
}

pub fn cmd_prove(args: &ProveArgs, out: &mut dyn Write) -> CmdResult {
    let builtin;
    let (topology, hub, family) = match (&args.builtin, &args.graph) {
        (Some(_), _) => {
            builtin = counterexample_topology();
            (
                builtin.topology.clone(),
                builtin.hub,
                Some(builtin.family.as_slice()),
            )
        }
        (None, Some(path)) => {
            let topology = read_graph(path)?;
            let hub_name = args
                .hub
                .as_deref()
                .ok_or_else(|| Failure(EXIT_INPUT, "--hub is required with a graph file".into()))?;
            let hub = topology.node(hub_name).map_err(input)?;
            (topology, hub, None)
        }
        (None, None) => return Err(Failure(EXIT_INPUT, "nothing to prove".into())),
    };
    let degree = topology.degree(hub);
    if degree > MAX_HUB_DEGREE {
        return Err(Failure(
            EXIT_INPUT,
            format!("hub degree {degree} exceeds the limit of {MAX_HUB_DEGREE}"),
        ));
    }
    let search = match family {
        Some(f) => ScenarioSearch::Family(f),
        None => ScenarioSearch::Exhaustive {
            budget: args.budget,
        },
    };
    let attempt = refute_orderings(&topology, hub, search).map_err(|e| match e {
        ImpossibilityError::IncompleteRefutation(_) => Failure(EXIT_FAILS, e.to_string()),
        other => input(other),
    })?;
    if let Some(dir) = &args.fixtures {
        write_fixtures(dir, &topology, &attempt)?;
    }
    let doc = RefutationDocument::new(&topology, &attempt);
    if args.json {
        emit(
            out,
            &(serde_json::to_string_pretty(&doc).expect("serializable") + "\n"),
        )?;
    } else {
        let mut text = String::new();
        for e in &attempt.entries {
            text.push_str(&format!(
                "ordering {}: refuted from {} with F={}: {}\n",
                e.ordering.display(&topology),
                topology.name(e.source),
                e.scenario.display(&topology),
                e.trace.render(&topology)
            ));
        }
        for o in &attempt.unrefuted {
            text.push_str(&format!("ordering {}: not refuted\n", o.display(&topology)));
        }
        text.push_str(&format!(
            "{}/{} orderings refuted at hub {}\n{}\n",
            attempt.entries.len(),
            doc.orderings_total,
            topology.name(hub),
            doc.conclusion
        ));
        emit(out, &text)?;
    }
    Ok(if attempt.is_complete() {
        EXIT_OK
    } else {
        EXIT_FAILS
    })
}

pub fn cmd_gen(args: &GenArgs, out: &mut dyn Write) -> CmdResult {
    let graphs = match (&args.mode.random, args.mode.all_connected) {
        (Some(nm), _) => {
            let seed = args
                .seed
                .ok_or_else(|| Failure(EXIT_INPUT, "--random requires --seed".into()))?;
            vec![random_connected(nm[0], nm[1], seed).map_err(input)?]
        }
        (None, Some(n)) => all_connected(n).map_err(input)?,
        (None, None) => {
            return Err(Failure(
                EXIT_INPUT,
                "choose --random or --all-connected".into(),
            ))
        }
    };
    match &args.out_dir {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
            for (k, g) in graphs.iter().enumerate() {
                let path = dir.join(format!("graph_{:05}.txt", k + 1));
                fs::write(&path, g.format()).map_err(|e| io_failure(&path, e))?;
            }
            emit(
                out,
                &format!(
                    "wrote {} to {}\n",
                    plural(graphs.len(), "graph"),
                    dir.display()
                ),
            )
        }
        None if graphs.len() == 1 => emit(out, &graphs[0].format()),
        None => {
            let mut text = String::new();
            for (k, g) in graphs.iter().enumerate() {
                text.push_str(&format!("# graph {}\n{}", k + 1, g.format()));
            }
            emit(out, &text)
        }
    }
}
