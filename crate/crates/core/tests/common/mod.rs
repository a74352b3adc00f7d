#![allow(dead_code)]

use std::collections::BTreeSet;

use abnsynth::analysis::check;
use abnsynth::comp::{resolve_thresholds, SynthesisConfig};
use abnsynth::graph::StateGraph;
use abnsynth::model::{enumerate_functions, Network, State, UpdateFunction};

/// Per gene, every in-bounds function meeting its threshold, by direct
/// evaluation over the graph.
pub fn threshold_filtered(g: &StateGraph, cfg: &SynthesisConfig, thresholds: &[usize]) -> Vec<Vec<UpdateFunction>> {
    let nodes: BTreeSet<State> = g.nodes().iter().copied().collect();
    cfg.genes
        .iter()
        .enumerate()
        .map(|(i, gc)| {
            enumerate_functions(&gc.activators, &gc.repressors, gc.max_activators, gc.max_repressors)
                .unwrap()
                .filter(|f| {
                    let achieved = nodes
                        .iter()
                        .filter(|&&s| !nodes.contains(&s.flip(i)) && f.evaluate(s) == s.get(i))
                        .count();
                    achieved >= thresholds[i]
                })
                .collect()
        })
        .collect()
}

/// Every function tuple that passes `check`, or `None` if there are more
/// than `cap` tuples to try.
pub fn brute_force(
    g: &StateGraph,
    cfg: &SynthesisConfig,
    initial: &[State],
    finals: &[State],
    max_steps: usize,
    cap: usize,
) -> Option<BTreeSet<Vec<UpdateFunction>>> {
    let thresholds = resolve_thresholds(g, cfg).unwrap();
    let per_gene = threshold_filtered(g, cfg, &thresholds);
    let total = per_gene.iter().try_fold(1usize, |acc, v| acc.checked_mul(v.len()))?;
    if total > cap {
        return None;
    }
    let nodes = g.nodes().to_vec();
    let mut out = BTreeSet::new();
    let n = per_gene.len();
    if per_gene.iter().any(|v| v.is_empty()) {
        return Some(out);
    }
    let mut idx = vec![0usize; n];
    loop {
        let fs: Vec<UpdateFunction> = (0..n).map(|i| per_gene[i][idx[i]].clone()).collect();
        let net = Network::from_functions(fs.clone());
        if check(&net, &nodes, initial, finals, &thresholds, Some(max_steps)).pass {
            out.insert(fs);
        }
        let mut k = n;
        loop {
            if k == 0 {
                return Some(out);
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < per_gene[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Verdict of the reachability and threshold conditions recomputed by
/// relaxing step distances over every node until nothing changes.
pub fn naive_verdict(net: &Network, nodes: &[State], initial: &[State], finals: &[State], thresholds: &[usize], max_steps: Option<usize>) -> bool {
    let set: BTreeSet<State> = nodes.iter().copied().collect();
    let mut dist: Vec<Option<usize>> = nodes.iter().map(|s| initial.contains(s).then_some(0)).collect();
    loop {
        let mut changed = false;
        for (j, &t) in nodes.iter().enumerate() {
            for (k, &s) in nodes.iter().enumerate() {
                let Some(d) = dist[k] else { continue };
                if s.hamming(t) != 1 {
                    continue;
                }
                let i = s.differing_gene(t).unwrap();
                if net.is_enabled(i, s) && dist[j].is_none_or(|e| d + 1 < e) {
                    dist[j] = Some(d + 1);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let reach = finals.iter().all(|f| {
        nodes
            .iter()
            .position(|s| s == f)
            .and_then(|j| dist[j])
            .is_some_and(|d| max_steps.is_none_or(|m| d <= m))
    });
    let thresh = (0..net.len()).all(|i| {
        let matched = nodes
            .iter()
            .filter(|s| !set.contains(&s.flip(i)) && !net.is_enabled(i, **s))
            .count();
        matched >= thresholds.get(i).copied().unwrap_or(0)
    });
    reach && thresh
}
