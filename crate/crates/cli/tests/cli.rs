use std::process::Command;

use graphviz_rust::dot_structures::{Edge, EdgeTy, Graph, Id, Stmt, Vertex};
use proptest::prelude::*;
use wardrop_cli::commands::{self, parse_methods, Method, RunOptions, Status};
use wardrop_cli::output::{flows_csv, flows_dot, round_row};
use wardrop_cli::presets::{self, NAMES};
use wardrop_cli::scenario::{CostSpec, EdgeEntry, EdgeRef, PopulationEntry, Scenario, ScenarioError, VertexId};
use wardrop_cli::CliError;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wardrop"))
}

fn as_value(s: &Scenario) -> serde_json::Value {
    serde_json::from_str(&s.to_json()).unwrap()
}

#[test]
fn presets_round_trip() {
    for name in NAMES {
        let s = presets::preset(name).unwrap();
        let back = Scenario::from_json(&s.to_json(), "again").unwrap();
        assert_eq!(back, s, "{name}");
        let original: serde_json::Value = serde_json::from_str(presets::preset_json(name).unwrap()).unwrap();
        assert_eq!(
            as_value(&back),
            as_value(&Scenario::from_json(&original.to_string(), "v").unwrap())
        );
    }
}

#[test]
fn field_order_does_not_matter() {
    let a = r#"{"vertices": ["a", "b", "c"], "edges": [["a", "b"], ["b", "c", 2.5]], "exits": ["c"],
        "populations": [{"entrances": {"a": 3}, "name": "p", "weight": 2}],
        "cost": {"params": {"mix": [0.25, 0.75]}, "type": "weighted"}}"#;
    let b = r#"{"cost": {"type": "weighted", "params": {"mix": [0.25, 0.75]}},
        "populations": [{"weight": 2, "name": "p", "entrances": {"a": 3}}],
        "exits": ["c"], "edges": [["a", "b"], ["b", "c", 2.5]], "vertices": ["a", "b", "c"]}"#;
    let (a, b) = (
        Scenario::from_json(a, "a").unwrap(),
        Scenario::from_json(b, "b").unwrap(),
    );
    assert_eq!(a, b);
    assert_eq!(
        a.edges[1],
        EdgeEntry::Measured(VertexId::Name("b".into()), VertexId::Name("c".into()), 2.5)
    );
    a.build().unwrap();
}

fn vertex() -> impl Strategy<Value = VertexId> {
    prop_oneof![
        (0u64..50).prop_map(VertexId::Number),
        "[a-z]{1,4}".prop_map(VertexId::Name)
    ]
}

fn edge_ref() -> impl Strategy<Value = EdgeRef> {
    (vertex(), vertex()).prop_map(|(a, b)| EdgeRef(a, b))
}

prop_compose! {
    fn population()(
        name in "[a-z]{1,6}",
        entrances in prop::collection::btree_map("[0-9a-z]{1,3}", 0.1f64..1e4, 1..3),
        excluded in prop::option::of(prop::collection::vec(edge_ref(), 0..3)),
        weight in prop::option::of(0.1f64..10.0),
        factor in prop::option::of(0.1f64..10.0),
    ) -> PopulationEntry {
        PopulationEntry { name, entrances, allowed_edges: None, excluded_edges: excluded, weight, emission_factor: factor }
    }
}

prop_compose! {
    fn scenario()(
        vertices in prop::collection::vec(vertex(), 1..6),
        edges in prop::collection::vec(prop_oneof![
            (vertex(), vertex()).prop_map(|(a, b)| EdgeEntry::Plain(a, b)),
            (vertex(), vertex(), 0.01f64..100.0).prop_map(|(a, b, s)| EdgeEntry::Measured(a, b, s)),
        ], 0..6),
        exits in prop::collection::vec(vertex(), 1..3),
        populations in prop::collection::vec(population(), 1..3),
        cost in prop_oneof![
            Just(CostSpec::LinearSum),
            (0.0f64..1.0, 0.0f64..1.0).prop_map(|m| CostSpec::Weighted(wardrop_cli::scenario::WeightedParams { mix: m })),
            Just(CostSpec::Emission(Box::default())),
        ],
        step in prop::option::of(1e-4f64..1.0),
        precision in prop::option::of(0u32..4),
        placeholder in any::<bool>(),
    ) -> Scenario {
        let mut s = Scenario {
            name: None, description: None, vertices, edges, exits, populations, cost,
            solver: Default::default(), output: Default::default(), placeholder_lengths: placeholder,
        };
        s.solver.step = step;
        s.output.precision = precision;
        s
    }
}

proptest! {
    #[test]
    fn serialization_round_trips(s in scenario()) {
        let back = Scenario::from_json(&s.to_json(), "rt").unwrap();
        prop_assert_eq!(&back, &s);
        // compact form and reordered object keys parse to the same scenario
        let compact = serde_json::to_string(&as_value(&s)).unwrap();
        prop_assert_eq!(Scenario::from_json(&compact, "rt").unwrap(), s);
    }

    #[test]
    fn printed_row_total_is_sum_of_printed_columns(
        values in prop::collection::vec(0.0f64..500.0, 1..6),
        precision in 0u32..4,
    ) {
        let (units, total) = round_row(&values, precision);
        let scale = 10f64.powi(precision as i32);
        prop_assert_eq!(units.iter().sum::<i64>(), total);
        prop_assert_eq!(total, (values.iter().sum::<f64>() * scale).round() as i64);
        for (u, v) in units.iter().zip(&values) {
            prop_assert!((*u as f64 - v * scale).abs() < 1.0);
        }
    }
}

fn parse_csv(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|x| x.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn labeled_edges(g: &Graph) -> (usize, usize) {
    let Graph::DiGraph { stmts, .. } = g else {
        panic!("expected a digraph")
    };
    let mut labeled = 0;
    let mut total = 0;
    for st in stmts {
        if let Stmt::Edge(Edge {
            ty: EdgeTy::Pair(Vertex::N(_), Vertex::N(_)),
            attributes,
        }) = st
        {
            total += 1;
            if attributes.iter().any(|a| matches!(&a.0, Id::Plain(k) if k == "label")) {
                labeled += 1;
            }
        }
    }
    (labeled, total)
}

#[test]
fn artifacts_follow_the_table_layout() {
    for name in NAMES {
        let built = presets::preset(name).unwrap().build().unwrap();
        let (report, _) = commands::solve(&built).unwrap();
        let net = built.system.network();
        let p = built.system.population_count();

        let (header, rows) = parse_csv(&flows_csv(&built.system, &report.profile, 0));
        assert_eq!(rows.len(), net.edge_count());
        assert_eq!(header.len(), 3 + 2 * (p + 1));
        assert_eq!(header[3 + p], "total");
        for row in &rows {
            let printed: i64 = row[3..3 + p].iter().map(|x| x.parse::<i64>().unwrap()).sum();
            assert_eq!(printed, row[3 + p].parse::<i64>().unwrap(), "{row:?}");
            let raw: f64 = row[4 + p..4 + 2 * p].iter().map(|x| x.parse::<f64>().unwrap()).sum();
            assert_eq!(raw.round() as i64, printed);
        }

        for r in 0..p {
            let dot = flows_dot(&built.system, &report.profile, r, 0);
            let graph = graphviz_rust::parse(&dot).unwrap_or_else(|e| panic!("{name}/{r}: {e}\n{dot}"));
            let nonzero = (0..net.edge_count())
                .filter(|&k| report.profile.full_population(r)[k].round() != 0.0)
                .count();
            assert_eq!(labeled_edges(&graph), (nonzero, net.edge_count()), "{name}/{r}");
        }
    }
}

#[test]
fn dot_escapes_awkward_names() {
    let s = r#"{"vertices": ["a \"x\"", "m", "b"], "edges": [["a \"x\"", "m"], ["m", "b"]], "exits": ["b"],
        "populations": [{"name": "p q", "entrances": {"a \"x\"": 1.25}}], "cost": {"type": "linear_sum"}}"#;
    let built = Scenario::from_json(s, "s").unwrap().build().unwrap();
    let (report, cert) = commands::solve(&built).unwrap();
    assert!(cert.passed);
    let dot = flows_dot(&built.system, &report.profile, 0, 2);
    assert!(dot.contains("label=\"1.25\""), "{dot}");
    assert_eq!(labeled_edges(&graphviz_rust::parse(&dot).unwrap()), (2, 2));
}

#[test]
fn run_writes_artifacts_atomically_named() {
    let dir = tempfile::tempdir().unwrap();
    let built = presets::preset("scenario1").unwrap().build().unwrap();
    let outcome = commands::run(
        &built,
        &RunOptions {
            out: Some(dir.path().into()),
            trajectory: true,
        },
    )
    .unwrap();
    assert_eq!(outcome.status, Status::Certified);
    let mut names: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(
        names,
        [
            "flows.csv",
            "flows_1.dot",
            "flows_2.dot",
            "summary.json",
            "trajectory.csv"
        ]
    );
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["certified"], true);
    assert!(summary["max_conservation_drift"].as_f64().unwrap() <= 1e-8);

    let (header, rows) = parse_csv(&std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap());
    let reduced: usize = built.system.populations().iter().map(|p| p.n_reduced()).sum();
    assert_eq!(header.len(), reduced + 2);
    assert_eq!(header.last().unwrap(), "rhs_norm");
    assert_eq!(rows.len(), outcome.report.trajectory.len());
}

#[test]
fn entrance_on_exit_names_the_vertex() {
    let s = r#"{"vertices": [1, 2, 3], "edges": [[1, 2], [2, 3]], "exits": [3],
        "populations": [{"name": "p", "entrances": {"3": 5}}], "cost": {"type": "linear_sum"}}"#;
    let err = Scenario::from_json(s, "s").unwrap().build().unwrap_err();
    assert!(err.to_string().contains("`3`"), "{err}");

    let s = s.replace(r#""3": 5"#, r#""1": 5"#).replace("[1, 2], [2, 3]", "[1, 3]");
    let err = Scenario::from_json(&s, "s").unwrap().build().unwrap_err();
    assert!(
        err.to_string().contains("`1`") && err.to_string().contains("`3`"),
        "{err}"
    );
}

#[test]
fn qp_is_inapplicable_to_scenario3() {
    let built = presets::preset("scenario3").unwrap().build().unwrap();
    let err = commands::compare(&built, &[Method::Qp]).unwrap_err();
    assert!(
        matches!(err, CliError::Inapplicable { method: Method::Qp, .. }),
        "{err}"
    );
    assert_eq!(err.status(), Status::InputError);
}

#[test]
fn method_lists_parse() {
    assert_eq!(parse_methods("hrf, qp,hrf").unwrap(), [Method::Hrf, Method::Qp]);
    assert!(parse_methods("hrf,newton").is_err());
    assert!(parse_methods("").is_err());
}

#[test]
fn unknown_preset_or_missing_file() {
    assert!(matches!(
        presets::load("scenario7"),
        Err(ScenarioError::UnknownPreset(_))
    ));
    assert!(matches!(
        presets::load("/no/such/file.json"),
        Err(ScenarioError::Io(..))
    ));
}

#[test]
fn binary_exit_statuses() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["run", "scenario1", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("flows.csv").exists());

    // a certificate tolerance that cannot be met
    let out = bin()
        .args(["run", "scenario1", "--tol", "1e-1", "--gap-tol", "1e-15", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"vertices\": [1,\n 2], \"edges\": 5}").unwrap();
    let out = bin().arg("validate").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(4));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("edges") && err.contains("line 2"), "{err}");

    let out = bin()
        .args(["compare", "scenario3", "--methods", "qp"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));

    let lengths = dir.path().join("lengths.json");
    std::fs::write(&lengths, presets::SCENARIO3_LENGTHS_TEMPLATE).unwrap();
    let out = bin()
        .args(["validate", "scenario3", "--lengths"])
        .arg(&lengths)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(!String::from_utf8_lossy(&out.stdout).contains("placeholder"));
}

#[test]
fn non_convergence_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let s = presets::preset_json("scenario2").unwrap().replace(
        r#""cost": {"type": "weighted""#,
        r#""solver": {"max_time": 0.05}, "cost": {"type": "weighted""#,
    );
    let file = dir.path().join("short.json");
    std::fs::write(&file, s).unwrap();
    let out = bin()
        .arg("run")
        .arg(&file)
        .arg("--out")
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stdout));
    // partial artifacts are still written
    assert!(dir.path().join("o/summary.json").exists());
}
