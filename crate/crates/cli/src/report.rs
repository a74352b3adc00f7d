use std::collections::BTreeMap;

use abnsynth::analysis::check;
use abnsynth::comp::{Family, SynthesisOutcome};
use abnsynth::direct::DirectOutcome;
use abnsynth::graph::StateGraph;
use abnsynth::model::{GeneSet, Network, State, UpdateFunction};
use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PathRecord {
    pub target: State,
    pub states: Vec<State>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Verification {
    /// Networks passed to the checker.
    pub checked: u64,
    /// Networks described by the result.
    pub total: u64,
    /// True when `checked < total` and a seeded sample was used.
    pub sampled: bool,
    pub failures: u64,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Timings {
    pub pruning: f64,
    pub paths: f64,
    pub genes: f64,
    pub direct: f64,
    pub verification: f64,
}

/// Output of `synthesize`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Results {
    pub genes: Vec<String>,
    pub initial: Vec<State>,
    pub finals: Vec<State>,
    pub candidates: BTreeMap<String, Vec<String>>,
    pub thresholds: BTreeMap<String, usize>,
    /// One entry per final state and family.
    pub paths: Vec<PathRecord>,
    pub families: usize,
    /// Explicit networks, direct mode only.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub networks: Vec<BTreeMap<String, String>>,
    pub repairs: usize,
    pub truncated: bool,
    pub verified: bool,
    pub verification: Verification,
    pub timings: Timings,
    pub config: RunConfig,
}

impl Results {
    /// Candidate functions parsed back, per gene in gene order.
    pub fn candidate_functions(&self, genes: &GeneSet) -> abnsynth::Result<Vec<Vec<UpdateFunction>>> {
        self.genes
            .iter()
            .map(|g| {
                self.candidates
                    .get(g)
                    .map(|fs| fs.iter().map(|f| UpdateFunction::parse(f, genes)).collect())
                    .unwrap_or(Ok(Vec::new()))
            })
            .collect()
    }
}

fn name_map<T>(genes: &GeneSet, values: impl IntoIterator<Item = T>) -> BTreeMap<String, T> {
    genes.names().iter().cloned().zip(values).collect()
}

fn show(genes: &GeneSet, fs: impl IntoIterator<Item = UpdateFunction>) -> Vec<String> {
    fs.into_iter().map(|f| f.display(genes)).collect()
}

struct Checker<'a> {
    g: &'a StateGraph,
    initial: &'a [State],
    finals: &'a [State],
    max_steps: Option<usize>,
    v: Verification,
}

impl Checker<'_> {
    fn run(&mut self, fs: Vec<UpdateFunction>, thresholds: &[usize]) {
        let net = Network::from_functions(fs);
        self.v.checked += 1;
        if !check(&net, self.g.nodes(), self.initial, self.finals, thresholds, self.max_steps).pass {
            self.v.failures += 1;
        }
    }

    fn family(&mut self, fam: &Family, limit: usize, rng: &mut ChaCha8Rng) {
        let size = fam.size();
        self.v.total = self.v.total.saturating_add(size.min(u64::MAX as u128) as u64);
        if size <= limit as u128 {
            for fs in fam.networks() {
                self.run(fs, &fam.thresholds);
            }
            return;
        }
        self.v.sampled = true;
        for _ in 0..limit {
            let fs = fam.functions.iter().map(|c| c.choose(rng).expect("non-empty").clone()).collect();
            self.run(fs, &fam.thresholds);
        }
    }
}

pub fn compositional(
    g: &StateGraph,
    initial: &[State],
    finals: &[State],
    out: SynthesisOutcome,
    config: RunConfig,
) -> Results {
    let genes = g.genes();
    let t = std::time::Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut ck = Checker {
        g,
        initial,
        finals,
        max_steps: config.max_path_len,
        v: Verification::default(),
    };
    for fam in &out.families {
        ck.family(fam, config.verify_limit, &mut rng);
    }
    let verification = ck.v;
    let thresholds = out
        .families
        .first()
        .map(|f| f.thresholds.clone())
        .unwrap_or_else(|| out.pruning.genes.iter().map(|p| p.threshold).collect());
    let paths = out
        .families
        .iter()
        .flat_map(|f| &f.paths)
        .map(|p| PathRecord {
            target: p.target,
            states: p.states.clone(),
        })
        .collect();
    Results {
        genes: genes.names().to_vec(),
        initial: initial.to_vec(),
        finals: finals.to_vec(),
        candidates: name_map(genes, out.candidates().into_iter().map(|c| show(genes, c))),
        thresholds: name_map(genes, thresholds),
        paths,
        families: out.families.len(),
        networks: Vec::new(),
        repairs: out.repairs,
        truncated: out.truncated,
        verified: verification.failures == 0 && verification.checked > 0,
        verification,
        timings: Timings {
            pruning: out.timings.pruning,
            paths: out.timings.paths,
            genes: out.timings.genes,
            direct: 0.0,
            verification: t.elapsed().as_secs_f64(),
        },
        config,
    }
}

pub fn direct(g: &StateGraph, initial: &[State], finals: &[State], out: DirectOutcome, config: RunConfig) -> Results {
    let genes = g.genes();
    let t = std::time::Instant::now();
    let mut ck = Checker {
        g,
        initial,
        finals,
        max_steps: Some(out.max_steps),
        v: Verification::default(),
    };
    for fs in &out.networks {
        ck.run(fs.clone(), &out.thresholds);
    }
    let mut verification = ck.v;
    verification.total = out.networks.len() as u64;
    Results {
        genes: genes.names().to_vec(),
        initial: initial.to_vec(),
        finals: finals.to_vec(),
        candidates: name_map(genes, out.candidates().into_iter().map(|c| show(genes, c))),
        thresholds: name_map(genes, out.thresholds.clone()),
        paths: Vec::new(),
        families: 0,
        networks: out
            .networks
            .iter()
            .map(|fs| name_map(genes, show(genes, fs.iter().cloned())))
            .collect(),
        repairs: 0,
        truncated: out.truncated,
        verified: verification.failures == 0 && verification.checked > 0,
        verification,
        timings: Timings {
            direct: out.seconds,
            verification: t.elapsed().as_secs_f64(),
            ..Timings::default()
        },
        config,
    }
}
