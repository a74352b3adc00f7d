//! Compositional synthesis: arc pruning, path selection and independent
//! per-gene function enumeration with core-guided path repair.

mod config;
mod gene;
mod paths;

use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap, HashSet};
use std::cmp::Reverse;
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Stage};
use crate::graph::{Arc, DirectedCandidateGraph, NodeId, StateGraph};
use crate::ingest::LabeledStateSet;
use crate::model::{State, UpdateFunction};
use crate::par;

pub use config::{GeneConfig, PathMode, SynthesisConfig, Threshold};
pub use paths::{shortest_path, KShortest, Path};

use gene::{GeneResult, GeneSession};

/// Which states must be reachable.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Targets {
    /// The set's final states.
    #[default]
    Labelled,
    /// Every state that is not initial.
    AllNonInitial,
}

impl std::str::FromStr for Targets {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "labelled" | "labeled" | "final" => Ok(Targets::Labelled),
            "all" | "all-non-initial" => Ok(Targets::AllNonInitial),
            _ => Err(format!("unknown target set `{s}` (expected `labelled` or `all`)")),
        }
    }
}

/// A state graph with designated initial and final nodes.
#[derive(Clone, Debug)]
pub struct Problem<'a> {
    pub graph: &'a StateGraph,
    pub initial: Vec<NodeId>,
    pub finals: Vec<NodeId>,
}

impl<'a> Problem<'a> {
    pub fn new(
        graph: &'a StateGraph,
        initial: impl IntoIterator<Item = State>,
        finals: impl IntoIterator<Item = State>,
    ) -> Result<Self> {
        let lookup = |s: State| {
            graph.id(s).ok_or_else(|| {
                Error::Config(format!("state {} is not a node of the graph", s.to_hex()))
            })
        };
        let mut initial = initial.into_iter().map(lookup).collect::<Result<Vec<_>>>()?;
        let mut finals = finals.into_iter().map(lookup).collect::<Result<Vec<_>>>()?;
        initial.sort_unstable();
        initial.dedup();
        finals.sort_unstable();
        finals.dedup();
        if initial.is_empty() {
            return Err(Error::Config("no initial states".into()));
        }
        Ok(Problem {
            graph,
            initial,
            finals,
        })
    }

    /// Initial states of `set`, finals chosen by `targets`.
    pub fn from_set(graph: &'a StateGraph, set: &LabeledStateSet, targets: Targets) -> Result<Self> {
        let finals: Vec<State> = match targets {
            Targets::Labelled => set.final_states.iter().copied().collect(),
            Targets::AllNonInitial => set.states().filter(|s| !set.initial.contains(s)).collect(),
        };
        Problem::new(graph, set.initial.iter().copied(), finals)
    }

    pub fn initial_states(&self) -> Vec<State> {
        self.initial.iter().map(|&v| self.graph.state(v)).collect()
    }

    pub fn final_states(&self) -> Vec<State> {
        self.finals.iter().map(|&v| self.graph.state(v)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenePruning {
    pub arcs: usize,
    pub retained: usize,
    /// Threshold the arcs were tested against.
    pub threshold: usize,
    /// `|N_i|`.
    pub sites: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PruneReport {
    pub arcs: usize,
    pub retained: usize,
    pub genes: Vec<GenePruning>,
}

impl PruneReport {
    /// Fraction of directed arcs removed.
    pub fn removed_fraction(&self) -> f64 {
        if self.arcs == 0 {
            0.0
        } else {
            (self.arcs - self.retained) as f64 / self.arcs as f64
        }
    }
}

/// Path chosen for one final state, as the visited states.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinalPath {
    pub target: State,
    pub states: Vec<State>,
}

/// One product family: every choice of one function per gene is a model.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Family {
    pub paths: Vec<FinalPath>,
    pub functions: Vec<Vec<UpdateFunction>>,
    /// Negative matches required of every function of each gene.
    pub thresholds: Vec<usize>,
}

impl Family {
    pub fn size(&self) -> u128 {
        self.functions
            .iter()
            .fold(1u128, |acc, f| acc.saturating_mul(f.len() as u128))
    }

    /// Every network of the family, in lexicographic order.
    pub fn networks(&self) -> impl Iterator<Item = Vec<UpdateFunction>> + '_ {
        let n = self.functions.len();
        let mut idx = vec![0usize; n];
        let mut done = self.functions.iter().any(|f| f.is_empty());
        std::iter::from_fn(move || {
            if done {
                return None;
            }
            let out: Vec<UpdateFunction> = (0..n).map(|i| self.functions[i][idx[i]].clone()).collect();
            let mut k = n;
            loop {
                if k == 0 {
                    done = true;
                    break;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < self.functions[k].len() {
                    break;
                }
                idx[k] = 0;
            }
            Some(out)
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub pruning: f64,
    pub paths: f64,
    pub genes: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthesisOutcome {
    pub pruning: PruneReport,
    /// The result is the union of the families' products.
    pub families: Vec<Family>,
    pub repairs: usize,
    pub combinations: usize,
    /// Whether the combination limit stopped a k-shortest search early.
    pub truncated: bool,
    pub timings: Timings,
}

impl SynthesisOutcome {
    /// Per gene, every function occurring in some family.
    pub fn candidates(&self) -> Vec<BTreeSet<UpdateFunction>> {
        let n = self.families.first().map_or(0, |f| f.functions.len());
        let mut out = vec![BTreeSet::new(); n];
        for fam in &self.families {
            for (i, fs) in fam.functions.iter().enumerate() {
                out[i].extend(fs.iter().cloned());
            }
        }
        out
    }

    /// Distinct networks across all families.
    pub fn networks(&self) -> BTreeSet<Vec<UpdateFunction>> {
        self.families.iter().flat_map(|f| f.networks()).collect()
    }
}

fn sessions(g: &StateGraph, cfg: &SynthesisConfig) -> Result<Vec<GeneSession>> {
    let items: Vec<usize> = (0..g.genes().len()).collect();
    par::map(cfg.workers, items, |i| {
        GeneSession::new(g, i, &cfg.genes[i], cfg.dump_dir.as_deref())
    })
    .into_iter()
    .collect()
}

fn check_thresholds(g: &StateGraph, cfg: &SynthesisConfig) -> Result<()> {
    cfg.validate(g.genes().len())?;
    for (i, gc) in cfg.genes.iter().enumerate() {
        if let Threshold::Fixed(t) = gc.threshold {
            let sites = g.index().without_edge(i).len();
            if t > sites {
                return Err(Error::Config(format!(
                    "gene {}: threshold {t} exceeds the {sites} candidate states",
                    g.genes().name(i)
                )));
            }
        }
    }
    Ok(())
}

/// Per-gene thresholds with AUTO replaced by the largest number of
/// negative matches any in-bounds function achieves.
pub fn resolve_thresholds(g: &StateGraph, cfg: &SynthesisConfig) -> Result<Vec<usize>> {
    check_thresholds(g, cfg)?;
    let items: Vec<usize> = (0..g.genes().len()).collect();
    par::map(cfg.workers, items, |i| match cfg.genes[i].threshold {
        Threshold::Fixed(t) => Ok(t),
        Threshold::Auto => {
            let mut s = GeneSession::new(g, i, &cfg.genes[i], None)?;
            Ok(s.max_matches(&[])?.unwrap_or(0))
        }
    })
    .into_iter()
    .collect()
}

fn prune_with(
    g: &StateGraph,
    cfg: &SynthesisConfig,
    sessions: &mut [GeneSession],
) -> Result<(DirectedCandidateGraph, PruneReport)> {
    let by_gene: Vec<Vec<Arc>> = {
        let mut v = vec![Vec::new(); g.genes().len()];
        for a in g.all_arcs() {
            v[a.gene].push(a);
        }
        v
    };
    let work: Vec<(usize, &mut GeneSession)> = sessions.iter_mut().enumerate().collect();
    let results = par::map(cfg.workers, work, |(i, s)| -> Result<(Vec<Arc>, GenePruning)> {
        let threshold = match cfg.genes[i].threshold {
            Threshold::Fixed(t) => t,
            Threshold::Auto => s.max_matches(&[])?.unwrap_or(0),
        };
        let mut kept = Vec::new();
        for &a in &by_gene[i] {
            if s.arc_feasible(g, a, threshold)? {
                kept.push(a);
            }
        }
        let report = GenePruning {
            arcs: by_gene[i].len(),
            retained: kept.len(),
            threshold,
            sites: s.sites(),
        };
        Ok((kept, report))
    });
    let mut arcs = Vec::new();
    let mut genes = Vec::new();
    for r in results {
        let (kept, report) = r?;
        arcs.extend(kept);
        genes.push(report);
    }
    let report = PruneReport {
        arcs: genes.iter().map(|r| r.arcs).sum(),
        retained: arcs.len(),
        genes,
    };
    log::info!(
        "pruning kept {} of {} arcs ({:.1}% removed)",
        report.retained,
        report.arcs,
        100.0 * report.removed_fraction()
    );
    Ok((DirectedCandidateGraph::new(g.node_count(), arcs), report))
}

/// Stage 1: keep the arcs that some in-bounds, threshold-feasible function
/// realises.
pub fn prune_edges(g: &StateGraph, cfg: &SynthesisConfig) -> Result<(DirectedCandidateGraph, PruneReport)> {
    check_thresholds(g, cfg)?;
    let mut ss = sessions(g, cfg)?;
    prune_with(g, cfg, &mut ss)
}

/// Stage 2 in shortest mode: one breadth-first path per final node.
pub fn choose_paths(d: &DirectedCandidateGraph, problem: &Problem<'_>) -> Result<Vec<Path>> {
    problem
        .finals
        .iter()
        .map(|&f| {
            shortest_path(d, &problem.initial, f).ok_or_else(|| unreachable_final(problem, f))
        })
        .collect()
}

fn unreachable_final(problem: &Problem<'_>, f: NodeId) -> Error {
    Error::NoModelsAtBounds {
        stage: Stage::PathSelection,
        detail: format!(
            "final state {} is unreachable from every initial state",
            problem.graph.state(f).to_hex()
        ),
    }
}

/// `P_i` for every gene: the `i`-labelled arcs of the given paths.
pub fn path_arcs(n: usize, paths: &[&Path]) -> Vec<BTreeSet<Arc>> {
    let mut out = vec![BTreeSet::new(); n];
    for p in paths {
        for a in &p.arcs {
            out[a.gene].insert(*a);
        }
    }
    out
}

/// Stage 3 for a single gene with its own solver session.
pub fn synthesize_gene(
    g: &StateGraph,
    gene: usize,
    arcs: &BTreeSet<Arc>,
    cfg: &SynthesisConfig,
) -> Result<Option<(usize, Vec<UpdateFunction>)>> {
    let gc = &cfg.genes[gene];
    let mut s = GeneSession::new(g, gene, gc, cfg.dump_dir.as_deref())?;
    let arcs: Vec<Arc> = arcs.iter().copied().collect();
    let fixed = match gc.threshold {
        Threshold::Fixed(t) => Some(t),
        Threshold::Auto => None,
    };
    Ok(match s.synthesize(g, &arcs, fixed)? {
        GeneResult::Sat {
            threshold,
            functions,
        } => Some((threshold, functions)),
        GeneResult::Unsat { .. } => None,
    })
}

struct Search<'p, 'g> {
    problem: &'p Problem<'g>,
    cfg: &'p SynthesisConfig,
    sessions: Vec<Mutex<GeneSession>>,
    resolved: Vec<usize>,
    cache: HashMap<(usize, BTreeSet<Arc>), GeneResult>,
    /// Per gene, arc sets that admit no function together.
    forbidden: Vec<Vec<BTreeSet<Arc>>>,
    /// AUTO genes take the best threshold their arcs allow instead of the
    /// pruning value.
    relaxed: bool,
}

enum ComboResult {
    Family(Vec<(usize, Vec<UpdateFunction>)>),
    /// Some gene admits no function; its core is now forbidden.
    Conflict,
    /// Known from an earlier core without solving.
    Skipped,
}

impl Search<'_, '_> {
    fn forbidden_in(&self, p: &[BTreeSet<Arc>]) -> bool {
        p.iter()
            .zip(&self.forbidden)
            .any(|(arcs, bans)| bans.iter().any(|b| b.is_subset(arcs)))
    }

    fn run(&mut self, p: Vec<BTreeSet<Arc>>) -> Result<ComboResult> {
        if self.forbidden_in(&p) {
            return Ok(ComboResult::Skipped);
        }
        let g = self.problem.graph;
        let todo: Vec<(usize, BTreeSet<Arc>)> = p
            .iter()
            .enumerate()
            .filter(|(i, arcs)| !self.cache.contains_key(&(*i, (*arcs).clone())))
            .map(|(i, arcs)| (i, arcs.clone()))
            .collect();
        let sessions = &self.sessions;
        let cfg = self.cfg;
        let resolved = &self.resolved;
        let relaxed = self.relaxed;
        let solved = par::map(cfg.workers, todo, |(i, arcs)| {
            let fixed = match cfg.genes[i].threshold {
                Threshold::Fixed(t) => Some(t),
                Threshold::Auto if relaxed => None,
                Threshold::Auto => Some(resolved[i]),
            };
            let list: Vec<Arc> = arcs.iter().copied().collect();
            let mut s = sessions[i].lock().expect("gene session poisoned");
            s.synthesize(g, &list, fixed).map(|r| ((i, arcs), r))
        });
        for r in solved {
            let (key, res) = r?;
            self.cache.insert(key, res);
        }
        let mut out = Vec::with_capacity(p.len());
        let mut conflict = false;
        for (i, arcs) in p.into_iter().enumerate() {
            match &self.cache[&(i, arcs)] {
                GeneResult::Sat {
                    threshold,
                    functions,
                } => out.push((*threshold, functions.clone())),
                GeneResult::Unsat { core } => {
                    if core.is_empty() {
                        return Err(Error::NoModelsAtBounds {
                            stage: Stage::GeneSynthesis,
                            detail: format!(
                                "gene {} admits no function at its threshold",
                                g.genes().name(i)
                            ),
                        });
                    }
                    let core: BTreeSet<Arc> = core.iter().copied().collect();
                    conflict = true;
                    if !self.forbidden[i].contains(&core) {
                        log::debug!("gene {}: forbidding {} path arcs together", i, core.len());
                        self.forbidden[i].push(core);
                    }
                }
            }
        }
        Ok(if conflict {
            ComboResult::Conflict
        } else {
            ComboResult::Family(out)
        })
    }

    fn family(&self, paths: &[Path], res: Vec<(usize, Vec<UpdateFunction>)>) -> Family {
        let g = self.problem.graph;
        Family {
            paths: paths.iter().map(|p| final_path(g, p.end(), p)).collect(),
            thresholds: res.iter().map(|r| r.0).collect(),
            functions: res.into_iter().map(|r| r.1).collect(),
        }
    }

    fn arcs_of(&self, paths: &[Path]) -> Vec<BTreeSet<Arc>> {
        let refs: Vec<&Path> = paths.iter().collect();
        path_arcs(self.problem.graph.genes().len(), &refs)
    }

    /// For each final in `order`, a short path whose arcs, together with
    /// those already chosen, contain no forbidden combination. The current
    /// shortest path is kept when possible; otherwise arcs that would
    /// complete a forbidden set are removed and the search starts over. On
    /// failure, the position of the stuck final.
    fn select_avoiding(&self, lists: &mut [KShortest<'_>], order: &[usize]) -> std::result::Result<Vec<Path>, usize> {
        let n = self.problem.graph.genes().len();
        let mut union: Vec<BTreeSet<Arc>> = vec![BTreeSet::new(); n];
        let mut choice: Vec<Option<Path>> = vec![None; lists.len()];
        let clean = |union: &[BTreeSet<Arc>], p: &Path| {
            p.arcs.iter().all(|a| {
                let i = a.gene;
                if self.forbidden[i].is_empty() {
                    return true;
                }
                let mut u = union[i].clone();
                u.extend(p.arcs.iter().filter(|b| b.gene == i));
                !self.forbidden[i].iter().any(|b| b.is_subset(&u))
            })
        };
        for (pos, &j) in order.iter().enumerate() {
            let mut picked = lists[j].get(0).filter(|p| clean(&union, p)).cloned();
            if picked.is_none() {
                let mut blocked = HashSet::new();
                for (i, bans) in self.forbidden.iter().enumerate() {
                    for b in bans {
                        let mut missing = b.iter().filter(|a| !union[i].contains(a));
                        if let (Some(a), None) = (missing.next(), missing.next()) {
                            blocked.insert(*a);
                        }
                    }
                }
                let mut alt = lists[j].without(blocked);
                for k in 0..self.cfg.repair_depth.max(1) {
                    let Some(p) = alt.get(k) else { break };
                    if clean(&union, p) {
                        picked = Some(p.clone());
                        break;
                    }
                }
            }
            let p = picked.ok_or(pos)?;
            for a in &p.arcs {
                union[a.gene].insert(*a);
            }
            choice[j] = Some(p);
        }
        Ok(choice.into_iter().map(|p| p.expect("every final is routed")).collect())
    }
}

type SearchResult = (Vec<Family>, usize, usize, bool);

/// Shortest paths first; on a conflict, forbid the core and reselect.
fn shortest_search(search: &mut Search<'_, '_>, lists: &mut [KShortest<'_>]) -> Result<SearchResult> {
    let mut repairs = 0;
    let mut combinations = 0;
    // finals that could not be routed move to the front
    let mut order: Vec<usize> = (0..lists.len()).collect();
    loop {
        let paths = match search.select_avoiding(lists, &order) {
            Ok(paths) => paths,
            Err(0) => {
                let g = search.problem.graph;
                return Err(Error::NoModelsAtBounds {
                    stage: Stage::PathSelection,
                    detail: format!(
                        "no path to final state {} avoids the conflicting arc combinations",
                        g.state(lists[order[0]].target()).to_hex()
                    ),
                });
            }
            Err(pos) => {
                let j = order.remove(pos);
                order.insert(0, j);
                repairs += 1;
                if repairs > search.cfg.repair_limit {
                    return Err(Error::RepairLimit {
                        iterations: search.cfg.repair_limit,
                    });
                }
                continue;
            }
        };
        combinations += 1;
        match search.run(search.arcs_of(&paths))? {
            ComboResult::Family(res) => {
                let fam = search.family(&paths, res);
                return Ok((vec![fam], repairs, combinations, false));
            }
            ComboResult::Conflict | ComboResult::Skipped => {
                repairs += 1;
                if repairs > search.cfg.repair_limit {
                    return Err(Error::RepairLimit {
                        iterations: search.cfg.repair_limit,
                    });
                }
            }
        }
    }
}

/// Every combination of the `k` shortest paths per final, best-first by
/// total length; the result is the union of all successful combinations.
fn k_search(search: &mut Search<'_, '_>, lists: &mut [KShortest<'_>], k: usize) -> Result<SearchResult> {
    let mut heap: BinaryHeap<Reverse<(usize, Vec<usize>)>> = BinaryHeap::new();
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let start = vec![0usize; lists.len()];
    let len0 = lists.iter_mut().map(|l| l.get(0).map_or(0, Path::len)).sum();
    heap.push(Reverse((len0, start.clone())));
    seen.insert(start);

    let mut families: BTreeMap<Vec<Vec<UpdateFunction>>, Family> = BTreeMap::new();
    let mut combinations = 0;
    let mut truncated = false;
    while let Some(Reverse((total, idx))) = heap.pop() {
        if combinations >= search.cfg.combination_limit {
            truncated = true;
            break;
        }
        combinations += 1;
        let paths: Vec<Path> = idx
            .iter()
            .zip(lists.iter_mut())
            .map(|(&k, l)| l.get(k).expect("index was produced").clone())
            .collect();
        if let ComboResult::Family(res) = search.run(search.arcs_of(&paths))? {
            let fam = search.family(&paths, res);
            families.entry(fam.functions.clone()).or_insert(fam);
        }
        for j in 0..idx.len() {
            let mut next = idx.clone();
            next[j] += 1;
            if next[j] >= k || seen.contains(&next) {
                continue;
            }
            let Some(len) = lists[j].get(next[j]).map(Path::len) else { continue };
            let prev = lists[j].get(idx[j]).map_or(0, Path::len);
            heap.push(Reverse((total - prev + len, next.clone())));
            seen.insert(next);
        }
    }
    Ok((families.into_values().collect(), 0, combinations, truncated))
}

fn final_path(g: &StateGraph, target: NodeId, p: &Path) -> FinalPath {
    FinalPath {
        target: g.state(target),
        states: p.nodes().into_iter().map(|v| g.state(v)).collect(),
    }
}

/// Full pipeline: prune, choose paths, synthesise each gene, repairing or
/// widening the paths as configured.
pub fn synthesize(problem: &Problem<'_>, cfg: &SynthesisConfig) -> Result<SynthesisOutcome> {
    let g = problem.graph;
    let n = g.genes().len();
    check_thresholds(g, cfg)?;

    let t0 = Instant::now();
    let mut ss = sessions(g, cfg)?;
    let (d, pruning) = prune_with(g, cfg, &mut ss)?;
    let mut timings = Timings {
        pruning: t0.elapsed().as_secs_f64(),
        ..Timings::default()
    };

    let t1 = Instant::now();
    let mut lists: Vec<KShortest<'_>> = problem
        .finals
        .iter()
        .map(|&f| KShortest::new(&d, &problem.initial, f, cfg.max_path_len))
        .collect();
    for l in &mut lists {
        if l.get(0).is_none() {
            return Err(match cfg.max_path_len {
                Some(m) if shortest_path(&d, &problem.initial, l.target()).is_some() => {
                    Error::NoModelsAtBounds {
                        stage: Stage::PathSelection,
                        detail: format!(
                            "final state {} needs more than {m} steps",
                            g.state(l.target()).to_hex()
                        ),
                    }
                }
                _ => unreachable_final(problem, l.target()),
            });
        }
    }
    timings.paths = t1.elapsed().as_secs_f64();

    let t2 = Instant::now();
    let mut search = Search {
        problem,
        cfg,
        sessions: ss.into_iter().map(Mutex::new).collect(),
        resolved: pruning.genes.iter().map(|g| g.threshold).collect(),
        cache: HashMap::new(),
        forbidden: vec![Vec::new(); n],
        relaxed: false,
    };
    let (families, repairs, combinations, truncated) = match cfg.path_mode {
        PathMode::Shortest => match shortest_search(&mut search, &mut lists) {
            Err(e @ (Error::NoModelsAtBounds { .. } | Error::RepairLimit { .. }))
                if cfg.genes.iter().any(|c| c.threshold == Threshold::Auto) =>
            {
                log::info!("{e}; lowering AUTO thresholds to what the shortest paths allow");
                search.relaxed = true;
                search.cache.clear();
                search.forbidden = vec![Vec::new(); n];
                shortest_search(&mut search, &mut lists)?
            }
            r => r?,
        },
        PathMode::KShortest(k) => k_search(&mut search, &mut lists, k)?,
    };
    timings.genes = t2.elapsed().as_secs_f64();
    log::info!(
        "examined {combinations} path combinations, {repairs} repairs, {} families",
        families.len()
    );

    if families.is_empty() && !truncated {
        return Err(Error::NoModelsAtBounds {
            stage: Stage::PathSelection,
            detail: "every path combination contains arcs no update function realises together"
                .into(),
        });
    }
    Ok(SynthesisOutcome {
        pruning,
        families,
        repairs,
        combinations,
        truncated,
        timings,
    })
}
