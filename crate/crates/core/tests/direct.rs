use std::collections::{BTreeMap, VecDeque};

use abnsynth::analysis::check;
use abnsynth::comp::{Problem, SynthesisConfig, Threshold};
use abnsynth::direct::{synthesize_direct, DirectConfig, DirectEncoding};
use abnsynth::fixtures::{cmp_config, cmp_genes, cmp_network, cmp_state_set};
use abnsynth::graph::StateGraph;
use abnsynth::model::{GeneSet, Network, Rule, State};
use abnsynth::{Error, Stage};

fn genes(n: usize) -> GeneSet {
    GeneSet::new((0..n).map(|i| format!("x{i}"))).unwrap()
}

fn graph(n: usize, states: &[u64]) -> StateGraph {
    StateGraph::build(&genes(n), states.iter().map(|&b| State(b)))
}

fn direct_cfg(max_steps: Option<usize>) -> DirectConfig {
    DirectConfig {
        max_steps,
        ..DirectConfig::default()
    }
}

#[test]
fn chain_is_oriented_forwards() {
    // x0 only: 01 -> 11 -> 10
    let g = graph(2, &[0b01, 0b11, 0b10]);
    let p = Problem::new(&g, [State(0b01)], [State(0b10)]).unwrap();
    let cfg = SynthesisConfig::uniform(2, 2, 1, Threshold::Fixed(0));
    let out = synthesize_direct(&p, &cfg, &direct_cfg(None)).unwrap();
    assert!(out.infeasible.is_none());
    assert!(!out.networks.is_empty());
    for fs in &out.networks {
        let net = Network::from_functions(fs.clone());
        assert!(net.is_enabled(1, State(0b01)));
        assert!(net.is_enabled(0, State(0b11)));
    }
}

#[test]
fn step_bound_excludes_long_paths() {
    let g = graph(2, &[0b01, 0b11, 0b10]);
    let p = Problem::new(&g, [State(0b01)], [State(0b10)]).unwrap();
    let cfg = SynthesisConfig::uniform(2, 2, 1, Threshold::Fixed(0));
    let out = synthesize_direct(&p, &cfg, &direct_cfg(Some(1))).unwrap();
    assert!(out.networks.is_empty());
    assert_eq!(out.infeasible, Some(Stage::Reachability));
}

#[test]
fn disconnected_final_has_no_networks() {
    let g = graph(2, &[0b00, 0b01, 0b11 << 2]);
    let g = StateGraph::build(&genes(4), g.nodes().iter().copied());
    let p = Problem::new(&g, [State(0b00)], [State(0b1100)]).unwrap();
    let cfg = SynthesisConfig::uniform(4, 1, 1, Threshold::Fixed(0));
    let out = synthesize_direct(&p, &cfg, &direct_cfg(None)).unwrap();
    assert!(out.networks.is_empty());
    assert_eq!(out.infeasible, Some(Stage::Reachability));
}

#[test]
fn every_node_initial_and_final_is_vacuous() {
    let states = [0b000, 0b001, 0b011, 0b111, 0b110];
    let g = graph(3, &states);
    let all: Vec<State> = states.iter().map(|&b| State(b)).collect();
    let p = Problem::new(&g, all.clone(), all).unwrap();
    let cfg = SynthesisConfig::uniform(3, 1, 0, Threshold::Fixed(0));
    let out = synthesize_direct(&p, &cfg, &direct_cfg(None)).unwrap();
    // nothing constrains the functions: 3 single activators per gene
    assert_eq!(out.networks.len(), 27);
}

#[test]
fn unreachable_threshold_is_diagnosed() {
    // 01 -> 11 is reachable, but x0 read through x1 alone keeps its value
    // at 11 only
    let g = graph(2, &[0b01, 0b11]);
    let p = Problem::new(&g, [State(0b01)], [State(0b11)]).unwrap();
    let mut cfg = SynthesisConfig::uniform(2, 1, 1, Threshold::Fixed(0));
    cfg.genes[0].activators = vec![1];
    cfg.genes[0].repressors = vec![1];
    cfg.genes[0].threshold = Threshold::Fixed(2);
    let out = synthesize_direct(&p, &cfg, &direct_cfg(None)).unwrap();
    assert!(out.networks.is_empty());
    assert_eq!(out.infeasible, Some(Stage::Threshold));
}

#[test]
fn node_limit_refuses() {
    let g = graph(2, &[0b00, 0b01, 0b11]);
    let p = Problem::new(&g, [State(0b00)], [State(0b11)]).unwrap();
    let cfg = SynthesisConfig::uniform(2, 1, 0, Threshold::Fixed(0));
    let d = DirectConfig {
        node_limit: 2,
        ..DirectConfig::default()
    };
    assert!(matches!(
        synthesize_direct(&p, &cfg, &d),
        Err(Error::DirectTooLarge { nodes: 3, limit: 2 })
    ));
}

#[test]
fn emitted_networks_pass_check() {
    let states = [0b000, 0b001, 0b011, 0b010, 0b110, 0b111];
    let g = graph(3, &states);
    let p = Problem::new(&g, [State(0b001)], [State(0b110), State(0b111)]).unwrap();
    let cfg = SynthesisConfig::uniform(3, 2, 1, Threshold::Auto);
    let out = synthesize_direct(&p, &cfg, &direct_cfg(None)).unwrap();
    assert!(!out.networks.is_empty());
    for fs in out.networks {
        let net = Network::from_functions(fs);
        let r = check(&net, g.nodes(), &p.initial_states(), &p.final_states(), &out.thresholds, Some(out.max_steps));
        assert!(r.pass);
    }
}

/// Longest shortest distance from the initial state to a stable state
/// along the reference network's own transitions.
fn reference_depth() -> usize {
    let set = cmp_state_set();
    let net = cmp_network();
    let start = *set.initial.iter().next().unwrap();
    let mut dist = BTreeMap::from([(start, 0usize)]);
    let mut queue = VecDeque::from([start]);
    while let Some(s) = queue.pop_front() {
        for (_, t) in net.successors(s) {
            if !dist.contains_key(&t) {
                dist.insert(t, dist[&s] + 1);
                queue.push_back(t);
            }
        }
    }
    set.final_states.iter().map(|f| dist[f]).max().unwrap()
}

#[test]
fn cmp_reference_functions_are_admitted() {
    let set = cmp_state_set();
    let g = StateGraph::from_state_set(&set);
    let p = Problem::new(&g, set.initial.iter().copied(), set.final_states.iter().copied()).unwrap();
    let mut enc = DirectEncoding::new(&p, &cmp_config(), &direct_cfg(Some(reference_depth()))).unwrap();
    assert_eq!(enc.diagnose().unwrap(), None);
    let net = cmp_network();
    let names = cmp_genes();
    let admitted: Vec<&str> = (0..net.len())
        .filter(|&i| match net.rule(i) {
            Rule::Function(f) => enc.admits(i, f).unwrap(),
            _ => false,
        })
        .map(|i| names.name(i))
        .collect();
    assert!(admitted.len() >= 10, "admitted only {admitted:?}");
}
