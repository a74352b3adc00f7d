//! Built-in benchmark data: the eleven-gene common myeloid progenitor
//! network and generators for planted synthetic instances.

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{check, reachable_space, stable_states};
use crate::comp::{GeneConfig, PathMode, SynthesisConfig, Threshold};
use crate::ingest::LabeledStateSet;
use crate::model::{enumerate_functions, GeneSet, Network, State, UpdateFunction};

pub const CMP_GENES: [&str; 11] = [
    "Gata2", "Gata1", "Fog1", "EKLF", "Fli1", "Scl", "Cebpa", "Pu.1", "cJun", "EgrNab", "Gfi1",
];

pub const CMP_NETWORK: &str = "\
Gata2 = Gata2 & !((Pu.1 | (Gata1 & Fog1)))
Gata1 = (Gata1 | Gata2 | Fli1) & !(Pu.1)
Fog1 = Gata1
EKLF = Gata1 & !(Fli1)
Fli1 = Gata1 & !(EKLF)
Scl = Gata1 & !(Pu.1)
Cebpa = Cebpa & !((Scl | (Fog1 & Gata1)))
Pu.1 = (Cebpa | Pu.1) & !((Gata1 | Gata2))
cJun = Pu.1 & !(Gfi1)
EgrNab = (Pu.1 & cJun) & !(Gfi1)
Gfi1 = Cebpa & !(EgrNab)
";

/// `(activators, repressors)` bounds per gene, matching the sizes of the
/// reference rules.
pub const CMP_BOUNDS: [(usize, usize); 11] = [
    (1, 3),
    (3, 1),
    (1, 0),
    (1, 1),
    (1, 1),
    (1, 1),
    (1, 3),
    (2, 2),
    (1, 1),
    (2, 1),
    (1, 1),
];

pub fn cmp_genes() -> GeneSet {
    GeneSet::new(CMP_GENES).expect("gene names are distinct")
}

pub fn cmp_network() -> Network {
    Network::parse(CMP_NETWORK, &cmp_genes()).expect("reference network parses")
}

/// States whose forward closure under `net` has exactly `size` states and
/// `attractors` fixed points, in increasing order.
pub fn initial_state_candidates(net: &Network, size: usize, attractors: usize) -> Vec<State> {
    let n = net.len();
    (0..1u64 << n)
        .map(State)
        .filter(|&s| {
            reachable_space(net, &[s], size + 1).is_ok_and(|ts| {
                ts.states.len() == size && stable_states(&ts).len() == attractors
            })
        })
        .collect()
}

/// The reference network's state space from its progenitor state: 214
/// states and four stable states. Initial = the progenitor, final = the
/// stable states.
pub fn cmp_state_set() -> LabeledStateSet {
    let net = cmp_network();
    let initial = *initial_state_candidates(&net, 214, 4)
        .first()
        .expect("a progenitor state exists");
    let ts = reachable_space(&net, &[initial], 1 << 11).expect("small space");
    let finals = stable_states(&ts);
    LabeledStateSet::from_states(cmp_genes(), ts.states.iter().copied(), [initial], finals)
}

/// Configuration used for the reference reconstruction: every gene may
/// read every gene, with the reference rule sizes as bounds.
pub fn cmp_config() -> SynthesisConfig {
    let all: Vec<usize> = (0..CMP_GENES.len()).collect();
    let mut cfg = SynthesisConfig::uniform(CMP_GENES.len(), 1, 0, Threshold::Auto);
    cfg.genes = CMP_BOUNDS
        .iter()
        .map(|&(a, r)| GeneConfig {
            activators: all.clone(),
            repressors: all.clone(),
            max_activators: a,
            max_repressors: r,
            threshold: Threshold::Auto,
        })
        .collect();
    cfg.path_mode = PathMode::Shortest;
    cfg
}

/// Every state of `set` that is not initial.
pub fn non_initial(set: &LabeledStateSet) -> Vec<State> {
    set.states().filter(|s| !set.initial.contains(s)).collect()
}

/// A generated instance together with the network that produced it.
#[derive(Clone, Debug)]
pub struct Planted {
    pub network: Network,
    pub set: LabeledStateSet,
    pub config: SynthesisConfig,
}

fn gene_names(n: usize) -> GeneSet {
    GeneSet::new((0..n).map(|i| format!("g{i}"))).expect("names are distinct")
}

fn random_function(rng: &mut ChaCha8Rng, act: &[usize], rep: &[usize], a: usize, r: usize) -> UpdateFunction {
    let all: Vec<UpdateFunction> = enumerate_functions(act, rep, a, r)
        .expect("pools are non-empty")
        .collect();
    all.choose(rng).expect("function space is non-empty").clone()
}

/// Small instance: a random network over `genes` genes (every gene in
/// every pool, `A, R <= 2`), explored from a random state. Initial is that
/// state, final the stable states, or every other state if there are none.
/// `None` when the explored space has more than `max_states` states or
/// fewer than two.
pub fn planted_small(seed: u64, genes: usize, max_states: usize) -> Option<Planted> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool: Vec<usize> = (0..genes).collect();
    let bounds: Vec<(usize, usize)> = (0..genes)
        .map(|_| (rng.random_range(1..=2), rng.random_range(0..=2)))
        .collect();
    let fs: Vec<UpdateFunction> = bounds
        .iter()
        .map(|&(a, r)| random_function(&mut rng, &pool, &pool, a, r))
        .collect();
    let network = Network::from_functions(fs);
    let start = State(rng.random_range(0..1u64 << genes));
    let ts = reachable_space(&network, &[start], max_states).ok()?;
    if ts.states.len() < 2 {
        return None;
    }
    let mut finals: BTreeSet<State> = stable_states(&ts);
    finals.remove(&start);
    if finals.is_empty() {
        finals = ts.states.iter().copied().filter(|&s| s != start).collect();
    }
    let set = LabeledStateSet::from_states(gene_names(genes), ts.states.iter().copied(), [start], finals);
    let mut config = SynthesisConfig::uniform(genes, 2, 2, Threshold::Auto);
    for (g, &(a, r)) in config.genes.iter_mut().zip(&bounds) {
        g.max_activators = a;
        g.max_repressors = r;
    }
    Some(Planted {
        network,
        set,
        config,
    })
}

/// Shape of a large synthetic data set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticShape {
    pub genes: usize,
    /// Target number of distinct states.
    pub states: usize,
    /// Number of distinct starting states.
    pub starts: usize,
    /// Regulators per gene in the planted network.
    pub regulators: usize,
    /// Extra candidate regulators per gene offered to synthesis.
    pub decoys: usize,
    pub seed: u64,
}

impl Default for SyntheticShape {
    fn default() -> Self {
        SyntheticShape {
            genes: 33,
            states: 1400,
            starts: 8,
            regulators: 3,
            decoys: 2,
            seed: 1,
        }
    }
}

/// Embryonic-shaped instance: random asynchronous walks of a planted
/// network from a few starting states, collected until the target number
/// of distinct states is reached. States are labelled by step count
/// (`t0`, `t1`, ...); initial are the starts, final the last state of
/// every walk. Synthesis pools hold each gene's planted regulators plus
/// `decoys` random others; thresholds are the negative-match counts the
/// planted network itself achieves.
pub fn synthetic(shape: &SyntheticShape) -> crate::Result<Planted> {
    let n = shape.genes;
    if n == 0 || n > 64 || shape.regulators == 0 || shape.regulators > n {
        return Err(crate::Error::Config(format!(
            "synthetic shape needs 1..=64 genes and 1..=genes regulators, got {} and {}",
            n, shape.regulators
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(shape.seed);
    let mut pools = Vec::with_capacity(n);
    let mut fs = Vec::with_capacity(n);
    for _ in 0..n {
        let mut regs: Vec<usize> = rand::seq::index::sample(&mut rng, n, shape.regulators).into_vec();
        regs.sort_unstable();
        let split = rng.random_range(1..=regs.len());
        let act = regs[..split].to_vec();
        let rep = regs[split..].to_vec();
        let f = random_function(&mut rng, &act, &rep, act.len().min(2), rep.len().min(2));
        fs.push(f);
        let mut pool: BTreeSet<usize> = regs.iter().copied().collect();
        let others: Vec<usize> = (0..n).filter(|g| !pool.contains(g)).collect();
        for &g in others.choose_multiple(&mut rng, shape.decoys.min(others.len())) {
            pool.insert(g);
        }
        pools.push(pool.into_iter().collect::<Vec<usize>>());
    }
    let network = Network::from_functions(fs);

    let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let starts: Vec<State> = (0..shape.starts.max(1))
        .map(|_| State(rng.random::<u64>() & mask))
        .collect();
    let mut depth: std::collections::BTreeMap<State, usize> = starts.iter().map(|&s| (s, 0)).collect();
    let mut finals = BTreeSet::new();
    let max_walk = 4 * n;
    let mut stale = 0;
    while depth.len() < shape.states && stale < 10_000 {
        let before = depth.len();
        let mut s = *starts.choose(&mut rng).expect("at least one start");
        let mut d = 0;
        for _ in 0..max_walk {
            let succ = network.successors(s);
            let Some(&(_, t)) = succ.choose(&mut rng) else { break };
            s = t;
            d += 1;
            let e = depth.entry(s).or_insert(d);
            *e = (*e).min(d);
            if depth.len() >= shape.states {
                break;
            }
        }
        finals.insert(s);
        stale = if depth.len() == before { stale + 1 } else { 0 };
    }
    for s in &starts {
        finals.remove(s);
    }
    let genes = gene_names(n);
    let mut set = LabeledStateSet::from_states(genes, depth.keys().copied(), starts.iter().copied(), finals);
    for (s, d) in &depth {
        set.labels.entry(*s).or_default().insert(format!("t{d}"));
    }
    let nodes: Vec<State> = set.states().collect();
    let achieved = check(&network, &nodes, &[], &[], &[], None).thresholds;
    let mut config = SynthesisConfig::uniform(n, 2, 2, Threshold::Auto);
    for ((g, pool), a) in config.genes.iter_mut().zip(pools).zip(achieved) {
        g.activators = pool.clone();
        g.repressors = pool;
        g.threshold = Threshold::Fixed(a.achieved);
    }
    Ok(Planted {
        network,
        set,
        config,
    })
}
