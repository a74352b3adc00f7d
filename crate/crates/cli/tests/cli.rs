use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use abnsynth::fixtures::planted_small;
use abnsynth::graph::StateGraph;
use abnsynth::ingest::LabeledStateSet;
use abnsynth::model::{GeneSet, State};
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_abnsynth"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().unwrap()
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures/cmp")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn without_timings(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("timings");
    v
}

fn candidates(v: &Value, gene: &str) -> Vec<String> {
    v["candidates"][gene]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s.as_str().unwrap().to_string())
        .collect()
}

/// A small planted instance written as a state file.
fn small_instance(dir: &Path) -> (PathBuf, usize) {
    let p = (1..200)
        .find_map(|s| planted_small(s, 3, 10).filter(|p| p.set.len() >= 5))
        .unwrap();
    let path = dir.join("small.json");
    p.set.save(&path).unwrap();
    (path, StateGraph::from_state_set(&p.set).node_count())
}

#[test]
fn discretize_counts_states() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("cells.csv");
    std::fs::write(
        &csv,
        "cell_id,time,a,b\nc1,early,0.0,2.5\nc2,early,0.0,7.1\nc3,late,1.2,0.0\n",
    )
    .unwrap();
    let out = dir.path().join("states.json");
    let text = ok(&["discretize", csv.to_str().unwrap(), "--initial", "early", "--final", "late", "-o", out.to_str().unwrap()]);
    assert!(text.starts_with("2 unique states from 3 cells"), "{text}");
    let set = LabeledStateSet::load(&out).unwrap();
    assert_eq!(set.initial.iter().copied().collect::<Vec<_>>(), vec![State(0b10)]);
}

#[test]
fn binary_input_is_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("cells.csv");
    std::fs::write(&csv, "cell_id,time,a,b,c\nx,t0,1,0,1\ny,t0,0,0,1\nz,t1,1,1,1\n").unwrap();
    let out = dir.path().join("states.json");
    ok(&["discretize", csv.to_str().unwrap(), "--initial", "t0", "--final", "t1", "-o", out.to_str().unwrap()]);
    let set = LabeledStateSet::load(&out).unwrap();
    let states: Vec<u64> = set.states().map(|s| s.0).collect();
    assert_eq!(states, vec![0b100, 0b101, 0b111]);
}

#[test]
fn input_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("cells.csv");
    std::fs::write(&csv, "cell_id,time,a\nx,t0,1\n").unwrap();
    let out = dir.path().join("s.json");
    let args = ["discretize", csv.to_str().unwrap(), "--initial", "t0", "--final", "t9", "-o", out.to_str().unwrap()];
    assert_eq!(code(&args), 2);

    std::fs::write(&csv, "cell_id,time,a\nx,t0,oops\n").unwrap();
    let r = run(&["discretize", csv.to_str().unwrap(), "--initial", "t0", "--final", "t0", "-o", out.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("row 2"));

    assert_eq!(code(&["synthesize", "/nonexistent/states.json"]), 2);
    assert_eq!(code(&["synthesize", &fixture("states.json"), "--threshold", "lots"]), 2);

    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "colour = \"red\"\n").unwrap();
    assert_eq!(code(&["synthesize", &fixture("states.json"), "--config", cfg.to_str().unwrap()]), 2);
}

#[test]
fn graph_summary_of_cmp() {
    let text = ok(&["graph", &fixture("states.json")]);
    assert_eq!(text.trim(), "214 states, 702 edges, 1 components (largest 214)");
    let dot = ok(&["graph", &fixture("states.json"), "--format", "dot"]);
    assert!(dot.starts_with("graph states {"));
}

#[test]
fn cmp_synthesis_reproduces_unique_functions() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    ok(&["synthesize", &fixture("states.json"), "--config", &fixture("run.toml"), "-o", out.to_str().unwrap()]);
    let v = json(&out);
    assert_eq!(v["verified"], Value::Bool(true));
    assert_eq!(candidates(&v, "Fog1"), vec!["Gata1"]);
    assert_eq!(candidates(&v, "EKLF"), vec!["Gata1 & !(Fli1)"]);
    assert_eq!(candidates(&v, "Gfi1"), vec!["Cebpa & !(EgrNab)"]);
    assert_eq!(v["config"]["finals"], "all-non-initial");
    assert_eq!(v["genes"].as_array().unwrap().len(), 11);
    assert_eq!(v["paths"].as_array().unwrap().len(), 213);

    // the results feed analysis: first candidates from the progenitor
    let text = ok(&["analyze", "--results", out.to_str().unwrap()]);
    let a: Value = serde_json::from_str(&text).unwrap();
    assert!(a["states"].as_u64().unwrap() >= 214);
}

#[test]
fn identical_runs_give_identical_json() {
    let dir = tempfile::tempdir().unwrap();
    let (states, _) = small_instance(dir.path());
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        ok(&["synthesize", states.to_str().unwrap(), "--seed", "7", "-o", out.to_str().unwrap()]);
    }
    assert_eq!(without_timings(json(&a)), without_timings(json(&b)));
}

#[test]
fn direct_and_compositional_agree_on_small_instance() {
    let dir = tempfile::tempdir().unwrap();
    let (states, nodes) = small_instance(dir.path());
    let m = (nodes - 1).to_string();
    let d = dir.path().join("d.json");
    let c = dir.path().join("c.json");
    ok(&["synthesize", states.to_str().unwrap(), "--mode", "direct", "--max-steps", &m, "-o", d.to_str().unwrap()]);
    ok(&["synthesize", states.to_str().unwrap(), "--k", "1000000", "--max-path-len", &m, "-o", c.to_str().unwrap()]);
    let (d, c) = (json(&d), json(&c));
    assert_eq!(d["verified"], Value::Bool(true));
    assert_eq!(c["verified"], Value::Bool(true));
    assert_eq!(d["candidates"], c["candidates"]);
}

#[test]
fn more_paths_never_shrink_candidates() {
    let dir = tempfile::tempdir().unwrap();
    let (states, _) = small_instance(dir.path());
    let one = dir.path().join("1.json");
    let three = dir.path().join("3.json");
    ok(&["synthesize", states.to_str().unwrap(), "--k", "1", "-o", one.to_str().unwrap()]);
    ok(&["synthesize", states.to_str().unwrap(), "--k", "3", "-o", three.to_str().unwrap()]);
    let (one, three) = (json(&one), json(&three));
    for g in one["genes"].as_array().unwrap() {
        let g = g.as_str().unwrap();
        let wide = candidates(&three, g);
        assert!(candidates(&one, g).iter().all(|f| wide.contains(f)), "{g}");
    }
}

#[test]
fn no_models_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let genes = GeneSet::new(["a", "b", "c", "d"]).unwrap();
    let set = LabeledStateSet::from_states(
        genes,
        [State(0b0011), State(0b0111), State(0b1100)],
        [State(0b0011)],
        [State(0b1100)],
    );
    let path = dir.path().join("s.json");
    set.save(&path).unwrap();
    let r = run(&["synthesize", path.to_str().unwrap(), "--threshold", "0"]);
    assert_eq!(r.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&r.stderr).contains("no models"));
    assert_eq!(code(&["synthesize", path.to_str().unwrap(), "--threshold", "0", "--mode", "direct"]), 3);
}

#[test]
fn direct_mode_refuses_large_graphs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "node_limit = 100\nmax_steps = 20\n").unwrap();
    let r = run(&["synthesize", &fixture("states.json"), "--config", cfg.to_str().unwrap(), "--mode", "direct"]);
    assert_eq!(r.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&r.stderr).contains("214 nodes"));
}

#[test]
fn reference_network_has_four_stable_states() {
    let set = LabeledStateSet::load(fixture("states.json")).unwrap();
    let start = set.initial.iter().next().unwrap().to_hex();
    let text = ok(&["analyze", "--network", &fixture("network.txt"), "--initial", &start]);
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["states"], 214);
    assert_eq!(v["stable_states"].as_array().unwrap().len(), 4);
}

#[test]
fn perturbation_reports() {
    let set = LabeledStateSet::load(fixture("states.json")).unwrap();
    let start = set.initial.iter().next().unwrap().to_hex();
    let net = fixture("network.txt");
    assert_eq!(code(&["perturb", "--network", &net, "--initial", &start, "--set", "Nope=1"]), 2);
    assert_eq!(code(&["perturb", "--network", &net, "--initial", &start, "--set", "Pu.1=2"]), 2);

    let text = ok(&["perturb", "--network", &net, "--initial", &start, "--set", "Pu.1=0"]);
    let v: Value = serde_json::from_str(&text).unwrap();
    let after: Vec<&str> = v["after"]["stable_states"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["bits"].as_str().unwrap())
        .collect();
    assert!(!after.is_empty());
    assert!(!v["lost"].as_array().unwrap().is_empty());
}

#[test]
fn bootstrap_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (states, _) = small_instance(dir.path());
    let args = ["bootstrap", states.to_str().unwrap(), "--runs", "4", "--finals", "all", "--seed", "3"];
    let a: Value = serde_json::from_str(&ok(&args)).unwrap();
    let b: Value = serde_json::from_str(&ok(&args)).unwrap();
    assert_eq!(a, b);
    for r in a["report"]["recurrence"].as_array().unwrap() {
        let f = r["frequency"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&f));
    }
    assert_eq!(a["report"]["runs"].as_array().unwrap().len(), 4);
}

#[test]
fn dump_cnf_writes_dimacs() {
    let dir = tempfile::tempdir().unwrap();
    let (states, _) = small_instance(dir.path());
    let cnf = dir.path().join("cnf");
    std::fs::create_dir(&cnf).unwrap();
    ok(&["synthesize", states.to_str().unwrap(), "--dump-cnf", cnf.to_str().unwrap()]);
    let files: Vec<_> = std::fs::read_dir(&cnf).unwrap().collect();
    assert!(!files.is_empty());
    let first = std::fs::read_to_string(files[0].as_ref().unwrap().path()).unwrap();
    assert!(first.lines().any(|l| l.starts_with("p cnf ")));
}

#[test]
fn generated_synthetic_instance_loads() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("syn");
    ok(&["generate", "synthetic", "-o", out.to_str().unwrap(), "--genes", "6", "--states", "40", "--seed", "2"]);
    let set = LabeledStateSet::load(out.join("states.json")).unwrap();
    assert_eq!(set.genes.len(), 6);
    assert_eq!(set.len(), 40);
    let text = std::fs::read_to_string(out.join("run.toml")).unwrap();
    assert!(text.contains("[genes.g0]"));
}
