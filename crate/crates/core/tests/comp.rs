mod common;

use std::collections::{BTreeSet, VecDeque};
use std::sync::OnceLock;

use abnsynth::comp::{
    choose_paths, prune_edges, resolve_thresholds, synthesize, synthesize_gene, PathMode, Problem, SynthesisConfig,
    SynthesisOutcome, Targets, Threshold,
};
use abnsynth::fixtures::{cmp_config, cmp_genes, cmp_state_set, non_initial, planted_small};
use abnsynth::graph::{DirectedCandidateGraph, StateGraph};
use abnsynth::model::{enumerate_functions, GeneSet, State, UpdateFunction};
use abnsynth::Error;

fn cmp_outcome() -> &'static SynthesisOutcome {
    static OUT: OnceLock<SynthesisOutcome> = OnceLock::new();
    OUT.get_or_init(|| {
        let set = cmp_state_set();
        let g = StateGraph::from_state_set(&set);
        let p = Problem::new(&g, set.initial.iter().copied(), non_initial(&set)).unwrap();
        synthesize(&p, &cmp_config()).unwrap()
    })
}

fn cmp_candidates(gene: &str) -> BTreeSet<String> {
    let genes = cmp_genes();
    let i = genes.index_of(gene).unwrap();
    cmp_outcome().candidates()[i].iter().map(|f| f.display(&genes)).collect()
}

fn names(fs: &[&str]) -> BTreeSet<String> {
    let genes = cmp_genes();
    fs.iter().map(|t| UpdateFunction::parse(t, &genes).unwrap().display(&genes)).collect()
}

#[test]
fn cmp_fog1_is_unique() {
    assert_eq!(cmp_candidates("Fog1"), names(&["Gata1"]));
}

#[test]
fn cmp_scl_has_two_candidates() {
    assert_eq!(cmp_candidates("Scl"), names(&["Gata1", "Gata1 & !Pu.1"]));
}

#[test]
fn cmp_egrnab_differs_from_reference() {
    assert_eq!(cmp_candidates("EgrNab"), names(&["(Gata1 | cJun) & !Gfi1"]));
}

#[test]
fn cmp_paths_are_directed_paths_of_the_pruned_graph() {
    let set = cmp_state_set();
    let g = StateGraph::from_state_set(&set);
    let (d, _) = prune_edges(&g, &cmp_config()).unwrap();
    let initial = set.initial.iter().copied().collect::<Vec<_>>();
    for fam in &cmp_outcome().families {
        for p in &fam.paths {
            assert!(initial.contains(&p.states[0]));
            assert_eq!(*p.states.last().unwrap(), p.target);
            for w in p.states.windows(2) {
                let (a, b) = (g.id(w[0]).unwrap(), g.id(w[1]).unwrap());
                let gene = w[0].differing_gene(w[1]).unwrap();
                assert!(d.contains(&abnsynth::graph::Arc { from: a, gene, to: b }));
            }
        }
    }
}

fn bfs_distance(d: &DirectedCandidateGraph, from: &[usize], to: usize) -> Option<usize> {
    let mut dist = vec![None; d.node_count()];
    let mut queue = VecDeque::new();
    for &v in from {
        dist[v] = Some(0);
        queue.push_back(v);
    }
    while let Some(v) = queue.pop_front() {
        for a in d.out_arcs(v) {
            if dist[a.to].is_none() {
                dist[a.to] = Some(dist[v].unwrap() + 1);
                queue.push_back(a.to);
            }
        }
    }
    dist[to]
}

#[test]
fn shortest_paths_have_bfs_length() {
    let set = cmp_state_set();
    let g = StateGraph::from_state_set(&set);
    let p = Problem::from_set(&g, &set, Targets::AllNonInitial).unwrap();
    let (d, _) = prune_edges(&g, &cmp_config()).unwrap();
    let paths = choose_paths(&d, &p).unwrap();
    assert_eq!(paths.len(), p.finals.len());
    for (path, &f) in paths.iter().zip(&p.finals) {
        assert_eq!(path.end(), f);
        assert_eq!(Some(path.len()), bfs_distance(&d, &p.initial, f));
    }
}

#[test]
fn unconstrained_gene_returns_every_function() {
    let set = cmp_state_set();
    let g = StateGraph::from_state_set(&set);
    let mut cfg = cmp_config();
    let fog1 = 2;
    cfg.genes[fog1].threshold = Threshold::Fixed(0);
    cfg.genes[fog1].max_activators = 2;
    cfg.genes[fog1].max_repressors = 1;
    let (t, fs) = synthesize_gene(&g, fog1, &BTreeSet::new(), &cfg).unwrap().unwrap();
    assert_eq!(t, 0);
    let gc = &cfg.genes[fog1];
    let oracle: BTreeSet<UpdateFunction> =
        enumerate_functions(&gc.activators, &gc.repressors, 2, 1).unwrap().collect();
    assert_eq!(fs.into_iter().collect::<BTreeSet<_>>(), oracle);
}

#[test]
fn single_state_keeps_every_function() {
    let genes = GeneSet::new(["a", "b", "c"]).unwrap();
    let g = StateGraph::build(&genes, [State(0b101)]);
    let p = Problem::new(&g, [State(0b101)], [State(0b101)]).unwrap();
    let cfg = SynthesisConfig::uniform(3, 1, 1, Threshold::Fixed(0));
    let out = synthesize(&p, &cfg).unwrap();
    let pool: Vec<usize> = (0..3).collect();
    let all: BTreeSet<UpdateFunction> = enumerate_functions(&pool, &pool, 1, 1).unwrap().collect();
    for c in out.candidates() {
        assert_eq!(c, all);
    }
}

#[test]
fn rising_out_of_all_zero_is_pruned() {
    let genes = GeneSet::new(["a", "b"]).unwrap();
    let g = StateGraph::build(&genes, [State(0b00), State(0b01), State(0b11)]);
    let cfg = SynthesisConfig::uniform(2, 2, 1, Threshold::Fixed(0));
    let (d, report) = prune_edges(&g, &cfg).unwrap();
    let zero = g.id(State(0)).unwrap();
    assert!(d.out_arcs(zero).is_empty());
    assert_eq!(report.arcs, 4);
}

#[test]
fn pruning_matches_enumeration() {
    let mut tested = 0;
    for seed in 1..60 {
        let Some(p) = planted_small(seed, 3 + (seed % 2) as usize, 12) else { continue };
        let g = StateGraph::from_state_set(&p.set);
        let (d, _) = prune_edges(&g, &p.config).unwrap();
        let t = resolve_thresholds(&g, &p.config).unwrap();
        let feasible = common::threshold_filtered(&g, &p.config, &t);
        for arc in g.all_arcs() {
            let from = g.state(arc.from);
            let oracle = feasible[arc.gene].iter().any(|f| f.is_enabled(arc.gene, from));
            assert_eq!(d.contains(&arc), oracle, "seed {seed}, arc {arc:?}");
        }
        tested += 1;
    }
    assert!(tested >= 10);
}

/// Eight states over four genes where the breadth-first path to the
/// final state needs two incompatible behaviours of one gene.
fn conflict_fixture() -> (StateGraph, SynthesisConfig) {
    let genes = GeneSet::new(["a", "b", "c", "d"]).unwrap();
    let g = StateGraph::build(&genes, [3, 4, 5, 6, 7, 9, 12, 13].map(State));
    let mut cfg = SynthesisConfig::uniform(4, 1, 0, Threshold::Fixed(0));
    let pools: [(&[usize], &[usize], usize); 4] = [
        (&[0, 2, 3], &[1], 0),
        (&[0, 1], &[2], 0),
        (&[2], &[0, 2, 3], 1),
        (&[0, 1, 2], &[0, 1, 2, 3], 1),
    ];
    for (gc, (a, r, rmax)) in cfg.genes.iter_mut().zip(pools) {
        gc.activators = a.to_vec();
        gc.repressors = r.to_vec();
        gc.max_repressors = rmax;
    }
    (g, cfg)
}

#[test]
fn conflicting_shortest_path_is_repaired() {
    let (g, cfg) = conflict_fixture();
    let p = Problem::new(&g, [State(4)], [State(6)]).unwrap();

    // oracle: no function tuple realises every arc of the first path
    let (d, _) = prune_edges(&g, &cfg).unwrap();
    let first = &choose_paths(&d, &p).unwrap()[0];
    let states: Vec<State> = first.nodes().iter().map(|&v| g.state(v)).collect();
    let realisable = (0..4).all(|i| {
        let gc = &cfg.genes[i];
        enumerate_functions(&gc.activators, &gc.repressors, gc.max_activators, gc.max_repressors)
            .unwrap()
            .any(|f| {
                states
                    .windows(2)
                    .filter(|w| w[0].differing_gene(w[1]) == Some(i))
                    .all(|w| f.is_enabled(i, w[0]))
            })
    });
    assert!(!realisable);

    let out = synthesize(&p, &cfg).unwrap();
    assert!(out.repairs >= 1);
    let oracle = common::brute_force(&g, &cfg, &[State(4)], &[State(6)], g.node_count() - 1, 1_000_000).unwrap();
    let nets = out.networks();
    assert!(!nets.is_empty());
    assert!(nets.is_subset(&oracle));
}

#[test]
fn compatible_paths_need_no_repair() {
    let (g, cfg) = conflict_fixture();
    let p = Problem::new(&g, [State(4)], [State(5)]).unwrap();
    let out = synthesize(&p, &cfg).unwrap();
    assert_eq!(out.repairs, 0);
}

#[test]
fn disconnected_final_is_reported() {
    let genes = GeneSet::new(["a", "b", "c", "d"]).unwrap();
    let g = StateGraph::build(&genes, [State(0b0011), State(0b0111), State(0b1100)]);
    let p = Problem::new(&g, [State(0b0011)], [State(0b1100)]).unwrap();
    let cfg = SynthesisConfig::uniform(4, 1, 1, Threshold::Fixed(0));
    assert!(matches!(synthesize(&p, &cfg), Err(Error::NoModelsAtBounds { .. })));
}

#[test]
fn widening_k_never_loses_networks() {
    let mut tested = 0;
    for seed in 1..80 {
        let Some(p) = planted_small(seed, 3, 10) else { continue };
        let g = StateGraph::from_state_set(&p.set);
        let problem = Problem::from_set(&g, &p.set, Targets::Labelled).unwrap();
        let run = |k| {
            let mut cfg = p.config.clone();
            cfg.path_mode = PathMode::KShortest(k);
            synthesize(&problem, &cfg).map(|o| o.networks()).unwrap_or_default()
        };
        let (one, three) = (run(1), run(3));
        assert!(one.is_subset(&three), "seed {seed}");
        tested += 1;
    }
    assert!(tested >= 10);
}

#[test]
fn lowering_thresholds_never_loses_networks() {
    let mut tested = 0;
    for seed in 1..80 {
        let Some(p) = planted_small(seed, 3, 10) else { continue };
        let g = StateGraph::from_state_set(&p.set);
        let problem = Problem::from_set(&g, &p.set, Targets::Labelled).unwrap();
        let t = resolve_thresholds(&g, &p.config).unwrap();
        let run = |lower: usize| {
            let mut cfg = p.config.clone();
            cfg.path_mode = PathMode::KShortest(usize::MAX);
            for (gc, &ti) in cfg.genes.iter_mut().zip(&t) {
                gc.threshold = Threshold::Fixed(ti.saturating_sub(lower));
            }
            synthesize(&problem, &cfg).map(|o| o.networks()).unwrap_or_default()
        };
        assert!(run(0).is_subset(&run(1)), "seed {seed}");
        tested += 1;
    }
    assert!(tested >= 10);
}

#[test]
fn sequential_and_parallel_agree() {
    let set = cmp_state_set();
    let g = StateGraph::from_state_set(&set);
    let p = Problem::new(&g, set.initial.iter().copied(), set.final_states.iter().copied()).unwrap();
    let mut cfg = cmp_config();
    cfg.workers = 1;
    let a = synthesize(&p, &cfg).unwrap();
    cfg.workers = 4;
    let b = synthesize(&p, &cfg).unwrap();
    assert_eq!(a.candidates(), b.candidates());
    assert_eq!(a.families, b.families);
}

#[test]
fn target_names() {
    assert_eq!("final".parse::<Targets>().unwrap(), Targets::Labelled);
    assert_eq!("all".parse::<Targets>().unwrap(), Targets::AllNonInitial);
    assert!("some".parse::<Targets>().is_err());
}
