//! Verification and analysis of concrete networks.
//!
//! [`check`] deliberately shares nothing with the solver encodings: it
//! rebuilds neighbourhoods by flipping bits and walks the induced state
//! space directly.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{GeneSet, Network, Rule, State, TransitionSystem};

/// Default limit on the number of states [`reachable_space`] may visit.
pub const DEFAULT_NODE_CAP: usize = 1 << 20;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinalWitness {
    pub state: State,
    /// Shortest witnessing path, starting at an initial state; `None` if
    /// the state is not reached within the step bound.
    pub path: Option<Vec<State>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdCheck {
    pub gene: usize,
    pub achieved: usize,
    pub required: usize,
    /// `|N_i|`.
    pub sites: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub reachability: Vec<FinalWitness>,
    pub thresholds: Vec<ThresholdCheck>,
    pub pass: bool,
}

impl VerificationReport {
    pub fn unreached(&self) -> impl Iterator<Item = State> + '_ {
        self.reachability
            .iter()
            .filter(|w| w.path.is_none())
            .map(|w| w.state)
    }
}

/// Check the reachability and threshold conditions of `network` over the
/// observed `nodes`.
///
/// Every final state must be reachable from some initial state by a path
/// of at most `max_steps` transitions (unbounded when `None`) that stays
/// inside `nodes`. For each gene `i`, the states of `nodes` whose
/// `i`-neighbour is unobserved must include at least `thresholds[i]` at
/// which gene `i` is not enabled.
pub fn check(
    network: &Network,
    nodes: &[State],
    initial: &[State],
    finals: &[State],
    thresholds: &[usize],
    max_steps: Option<usize>,
) -> VerificationReport {
    let observed: HashSet<State> = nodes.iter().copied().collect();
    let n = network.len();

    let mut parent: HashMap<State, Option<State>> = HashMap::new();
    let mut queue = VecDeque::new();
    let mut starts: Vec<State> = initial
        .iter()
        .copied()
        .filter(|s| observed.contains(s))
        .collect();
    starts.sort();
    starts.dedup();
    for s in starts {
        parent.insert(s, None);
        queue.push_back((s, 0usize));
    }
    while let Some((s, d)) = queue.pop_front() {
        if max_steps.is_some_and(|m| d >= m) {
            continue;
        }
        for i in 0..n {
            if network.rule(i).evaluate(s) == s.get(i) {
                continue;
            }
            let t = State(s.0 ^ (1u64 << i));
            if observed.contains(&t) && !parent.contains_key(&t) {
                parent.insert(t, Some(s));
                queue.push_back((t, d + 1));
            }
        }
    }
    let reachability: Vec<FinalWitness> = finals
        .iter()
        .map(|&f| {
            let path = parent.contains_key(&f).then(|| {
                let mut p = vec![f];
                let mut cur = f;
                while let Some(Some(prev)) = parent.get(&cur) {
                    p.push(*prev);
                    cur = *prev;
                }
                p.reverse();
                p
            });
            FinalWitness { state: f, path }
        })
        .collect();

    let thresholds: Vec<ThresholdCheck> = (0..n)
        .map(|i| {
            let mut sites = 0;
            let mut achieved = 0;
            for &s in nodes {
                if observed.contains(&State(s.0 ^ (1u64 << i))) {
                    continue;
                }
                sites += 1;
                if network.rule(i).evaluate(s) == s.get(i) {
                    achieved += 1;
                }
            }
            ThresholdCheck {
                gene: i,
                achieved,
                required: thresholds.get(i).copied().unwrap_or(0),
                sites,
            }
        })
        .collect();

    let pass = reachability.iter().all(|w| w.path.is_some())
        && thresholds.iter().all(|t| t.achieved >= t.required);
    VerificationReport {
        reachability,
        thresholds,
        pass,
    }
}

/// Forward closure of `initial` under the asynchronous successor relation.
pub fn reachable_space(network: &Network, initial: &[State], cap: usize) -> Result<TransitionSystem> {
    let mut ts = TransitionSystem::default();
    let mut queue: VecDeque<State> = VecDeque::new();
    for &s in initial {
        if ts.states.insert(s) {
            queue.push_back(s);
        }
    }
    if ts.states.len() > cap {
        return Err(Error::StateCapExceeded { cap });
    }
    while let Some(s) = queue.pop_front() {
        for (i, t) in network.successors(s) {
            ts.arcs.insert((s, i, t));
            if ts.states.insert(t) {
                if ts.states.len() > cap {
                    return Err(Error::StateCapExceeded { cap });
                }
                queue.push_back(t);
            }
        }
    }
    Ok(ts)
}

/// States of `ts` without outgoing transitions.
pub fn stable_states(ts: &TransitionSystem) -> BTreeSet<State> {
    ts.states
        .iter()
        .copied()
        .filter(|&s| !ts.has_successor(s))
        .collect()
}

/// Forcing of one gene to a constant value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Perturbation {
    pub gene: usize,
    pub value: bool,
}

/// Copy of `network` with `p.gene` replaced by a constant rule.
pub fn perturb(network: &Network, p: Perturbation) -> Result<Network> {
    if p.gene >= network.len() {
        return Err(Error::GeneOutOfRange {
            index: p.gene,
            width: network.len(),
        });
    }
    Ok(network.with_rule(p.gene, Rule::Constant(p.value)))
}

/// State rendered for reports: hex, bit string and the expressed genes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateDescription {
    pub state: State,
    pub bits: String,
    pub expressed: Vec<String>,
}

pub fn describe(genes: &GeneSet, s: State) -> StateDescription {
    StateDescription {
        state: s,
        bits: s.to_bit_string(genes.len()),
        expressed: (0..genes.len())
            .filter(|&i| s.get(i))
            .map(|i| genes.name(i).to_string())
            .collect(),
    }
}
