use resroute::document::{
    graph_hash, DocumentError, PatternDocument, RefutationDocument, ReportDocument, PATTERN_SCHEMA,
    REFUTATION_SCHEMA, REPORT_SCHEMA,
};
use resroute::impossibility::{counterexample_topology, refute_orderings, ScenarioSearch};
use resroute::{build_resilient, verify_resilience, BuildMode, Dag, ForwardingPattern, Topology};
use serde_json::Value;

fn tri() -> Topology {
    Topology::parse("dest d\nedge 1 2\nedge 1 d\nedge 2 d\n").unwrap()
}

fn cyc() -> Topology {
    Topology::parse("dest d\nedge 1 d\nedge 1 2\nedge 2 3\nedge 1 3\n").unwrap()
}

fn assert_valid(schema: &str, doc: &str) {
    let schema: Value = serde_json::from_str(schema).unwrap();
    let doc: Value = serde_json::from_str(doc).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(&doc).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:?}\n{doc:#}");
}

#[test]
fn pattern_document_matches_schema_and_round_trips() {
    for t in [tri(), cyc()] {
        let build = build_resilient(&t, BuildMode::Operational).unwrap();
        let doc = PatternDocument::export(&t, &build.pattern, "operational");
        let json = doc.to_json();
        assert_valid(PATTERN_SCHEMA, &json);
        let back = PatternDocument::from_json(&json)
            .unwrap()
            .import(&t)
            .unwrap();
        assert_eq!(back, build.pattern);
        assert_eq!(doc.provenance.graph_hash, graph_hash(&t));
    }
}

#[test]
fn graph_hash_ignores_declaration_order() {
    let a = Topology::parse("dest d\nedge 1 2\nedge 1 d\nedge 2 d\n").unwrap();
    let b = Topology::parse("dest d\nedge d 2\nedge 2 1\nedge d 1\n").unwrap();
    assert_eq!(graph_hash(&a), graph_hash(&b));
    assert_ne!(graph_hash(&a), graph_hash(&cyc()));
}

#[test]
fn import_rejects_foreign_graph() {
    let t = tri();
    let p = ForwardingPattern::new(Dag::build(&t).unwrap());
    let doc = PatternDocument::export(&t, &p, "operational");
    assert!(doc.import(&cyc()).is_err());
}

#[test]
fn import_rejects_unknown_schema_version() {
    let t = tri();
    let p = ForwardingPattern::new(Dag::build(&t).unwrap());
    let json = PatternDocument::export(&t, &p, "operational")
        .to_json()
        .replace("\"schema_version\": 1", "\"schema_version\": 9");
    let doc = PatternDocument::from_json(&json).unwrap();
    assert!(matches!(
        doc.import(&t),
        Err(DocumentError::SchemaVersion(9))
    ));
}

#[test]
fn report_document_matches_schema() {
    let t = cyc();
    let dag_only = ForwardingPattern::new(Dag::build(&t).unwrap());
    for p in [
        dag_only,
        build_resilient(&t, BuildMode::Operational).unwrap().pattern,
    ] {
        let report = verify_resilience(&p, &t, 1).unwrap();
        let json = serde_json::to_string(&ReportDocument::new(&t, &report)).unwrap();
        assert_valid(REPORT_SCHEMA, &json);
    }
}

#[test]
fn refutation_document_matches_schema() {
    let ce = counterexample_topology();
    let attempt =
        refute_orderings(&ce.topology, ce.hub, ScenarioSearch::Family(&ce.family)).unwrap();
    let json = serde_json::to_string(&RefutationDocument::new(&ce.topology, &attempt)).unwrap();
    assert_valid(REFUTATION_SCHEMA, &json);

    let t = tri();
    let attempt = refute_orderings(
        &t,
        t.node("1").unwrap(),
        ScenarioSearch::Exhaustive { budget: 1 << 10 },
    )
    .unwrap();
    let json = serde_json::to_string(&RefutationDocument::new(&t, &attempt)).unwrap();
    assert_valid(REFUTATION_SCHEMA, &json);
}
