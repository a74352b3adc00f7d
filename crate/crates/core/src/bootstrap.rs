//! Robustness of synthesis under subsampling of the observed states.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::comp::{prune_edges, resolve_thresholds, shortest_path, synthesize, Problem, SynthesisConfig, Targets, Threshold};
use crate::error::{Error, Result};
use crate::graph::StateGraph;
use crate::ingest::LabeledStateSet;
use crate::model::{GeneSet, State, UpdateFunction};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapRun {
    pub seed: u64,
    pub states: usize,
    pub finals: usize,
    /// Targets dropped because pruning left them unreachable.
    pub unreachable: usize,
    /// Per gene, the candidate functions; `None` when synthesis failed.
    pub candidates: Option<Vec<Vec<UpdateFunction>>>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Recurrence {
    pub gene: String,
    pub function: String,
    /// Runs whose candidates contain the function.
    pub runs: usize,
    /// `runs` over all runs, failed ones included.
    pub frequency: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapReport {
    pub keep: f64,
    pub runs: Vec<BootstrapRun>,
    pub recurrence: Vec<Recurrence>,
}

impl BootstrapReport {
    pub fn failures(&self) -> usize {
        self.runs.iter().filter(|r| r.candidates.is_none()).count()
    }

    /// Recurrence of one function, zero if it never occurred.
    pub fn frequency(&self, gene: &str, function: &str) -> f64 {
        self.recurrence
            .iter()
            .find(|r| r.gene == gene && r.function == function)
            .map_or(0.0, |r| r.frequency)
    }
}

/// Subsample keeping every initial state and a `keep` fraction of the
/// others. Finals are those of `targets` that were kept and share a
/// connected component with some initial state.
pub fn subsample(set: &LabeledStateSet, targets: Targets, keep: f64, seed: u64) -> Result<(LabeledStateSet, Vec<State>)> {
    let others: LabeledStateSet = {
        let rest: BTreeSet<State> = set.states().filter(|s| !set.initial.contains(s)).collect();
        set.restrict(&rest)
    };
    let sampled = others.bootstrap_sample(keep, seed)?;
    let mut kept: BTreeSet<State> = sampled.states().collect();
    kept.extend(set.initial.iter().copied());
    let sub = set.restrict(&kept);
    let g = StateGraph::from_state_set(&sub);
    let ids = g.component_ids();
    let anchored: BTreeSet<usize> = sub
        .initial
        .iter()
        .filter_map(|&s| g.id(s))
        .map(|v| ids[v])
        .collect();
    let wanted: Vec<State> = match targets {
        Targets::Labelled => sub.final_states.iter().copied().collect(),
        Targets::AllNonInitial => sub.states().filter(|s| !sub.initial.contains(s)).collect(),
    };
    let finals = wanted
        .into_iter()
        .filter(|&s| g.id(s).is_some_and(|v| anchored.contains(&ids[v])))
        .collect();
    Ok((sub, finals))
}

/// Thresholds for one subsample: AUTO genes get their full-data value
/// scaled by `keep`, fixed ones are capped at the available sites.
fn subsample_config(g: &StateGraph, cfg: &SynthesisConfig, full: &[usize], keep: f64) -> SynthesisConfig {
    let mut cfg = cfg.clone();
    for (i, gc) in cfg.genes.iter_mut().enumerate() {
        let sites = g.index().without_edge(i).len();
        let t = match gc.threshold {
            Threshold::Auto => (full[i] as f64 * keep).floor() as usize,
            Threshold::Fixed(t) => t,
        };
        gc.threshold = Threshold::Fixed(t.min(sites));
    }
    cfg
}

/// Rerun synthesis on one subsample per seed and count how often each
/// candidate function recurs.
pub fn bootstrap(
    set: &LabeledStateSet,
    targets: Targets,
    cfg: &SynthesisConfig,
    keep: f64,
    seeds: &[u64],
) -> Result<BootstrapReport> {
    if seeds.is_empty() {
        return Err(Error::Config("bootstrap needs at least one seed".into()));
    }
    let genes: &GeneSet = &set.genes;
    let full = resolve_thresholds(&StateGraph::from_state_set(set), cfg)?;
    let mut runs = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let (sub, finals) = subsample(set, targets, keep, seed)?;
        let g = StateGraph::from_state_set(&sub);
        let cfg = &subsample_config(&g, cfg, &full, keep);
        let (d, _) = prune_edges(&g, cfg)?;
        let initial: Vec<_> = sub.initial.iter().filter_map(|&s| g.id(s)).collect();
        let total = finals.len();
        let finals: Vec<State> = finals
            .into_iter()
            .filter(|&f| g.id(f).is_some_and(|v| shortest_path(&d, &initial, v).is_some()))
            .collect();
        let problem = Problem::new(&g, sub.initial.iter().copied(), finals.iter().copied())?;
        let (candidates, error) = match synthesize(&problem, cfg) {
            Ok(out) => (
                Some(out.candidates().into_iter().map(|s| s.into_iter().collect()).collect()),
                None,
            ),
            Err(e @ (Error::NoModelsAtBounds { .. } | Error::RepairLimit { .. })) => (None, Some(e.to_string())),
            Err(e) => return Err(e),
        };
        log::info!("bootstrap seed {seed}: {} states, {} finals", sub.len(), finals.len());
        runs.push(BootstrapRun {
            seed,
            states: sub.len(),
            finals: finals.len(),
            unreachable: total - finals.len(),
            candidates,
            error,
        });
    }
    let mut counts: BTreeMap<(usize, String), usize> = BTreeMap::new();
    for r in &runs {
        for (i, fs) in r.candidates.iter().flatten().enumerate() {
            for f in fs {
                *counts.entry((i, f.display(genes))).or_default() += 1;
            }
        }
    }
    let recurrence = counts
        .into_iter()
        .map(|((i, function), n)| Recurrence {
            gene: genes.name(i).to_string(),
            function,
            runs: n,
            frequency: n as f64 / runs.len() as f64,
        })
        .collect();
    Ok(BootstrapReport {
        keep,
        runs,
        recurrence,
    })
}
