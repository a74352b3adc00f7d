//! Undirected Hamming-1 state graphs, per-gene edge indexes and the
//! directed graphs that survive arc pruning.

mod export;

use std::collections::{BTreeSet, HashMap, VecDeque};

use crate::ingest::LabeledStateSet;
use crate::model::{GeneSet, State};

pub use export::{export_dot, export_graphml, write_export, ExportFormat};

pub type NodeId = usize;

/// Undirected edge between two node ids, `a < b`, labelled with the only
/// gene on which the endpoint states differ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub a: NodeId,
    pub b: NodeId,
    pub gene: usize,
}

/// Directed version of an edge. Field order gives the arc tie-break order
/// (source, gene, target); node ids follow state order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Arc {
    pub from: NodeId,
    pub gene: usize,
    pub to: NodeId,
}

#[derive(Clone, Debug)]
pub struct StateGraph {
    genes: GeneSet,
    nodes: Vec<State>,
    ids: HashMap<State, NodeId>,
    edges: Vec<Edge>,
    /// `(neighbour, gene)` sorted by gene then neighbour.
    adjacency: Vec<Vec<(NodeId, usize)>>,
    index: GeneEdgeIndex,
}

/// Per-gene edge lists and the `N_i` sets: nodes with no incident edge
/// labelled with gene `i`.
#[derive(Clone, Debug, Default)]
pub struct GeneEdgeIndex {
    edges: Vec<Vec<usize>>,
    without: Vec<Vec<NodeId>>,
}

impl GeneEdgeIndex {
    /// Edge ids labelled with gene `i`.
    pub fn edges(&self, i: usize) -> &[usize] {
        &self.edges[i]
    }

    /// `N_i`, sorted by state.
    pub fn without_edge(&self, i: usize) -> &[NodeId] {
        &self.without[i]
    }
}

impl StateGraph {
    /// Builds the graph by probing each state's single-bit neighbours in a
    /// hash map.
    pub fn build(genes: &GeneSet, states: impl IntoIterator<Item = State>) -> Self {
        let set: BTreeSet<State> = states.into_iter().collect();
        let nodes: Vec<State> = set.into_iter().collect();
        let ids: HashMap<State, NodeId> = nodes.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        let n = genes.len();
        let mut edges = Vec::new();
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for (a, s) in nodes.iter().enumerate() {
            for g in 0..n {
                if let Some(&b) = ids.get(&s.flip(g)) {
                    adjacency[a].push((b, g));
                    if a < b {
                        edges.push(Edge { a, b, gene: g });
                    }
                }
            }
        }
        edges.sort();
        let mut by_gene = vec![Vec::new(); n];
        let mut touched = vec![vec![false; nodes.len()]; n];
        for (k, e) in edges.iter().enumerate() {
            by_gene[e.gene].push(k);
            touched[e.gene][e.a] = true;
            touched[e.gene][e.b] = true;
        }
        let without = touched
            .iter()
            .map(|t| (0..nodes.len()).filter(|&v| !t[v]).collect())
            .collect();
        StateGraph {
            genes: genes.clone(),
            nodes,
            ids,
            edges,
            adjacency,
            index: GeneEdgeIndex {
                edges: by_gene,
                without,
            },
        }
    }

    pub fn from_state_set(set: &LabeledStateSet) -> Self {
        Self::build(&set.genes, set.states())
    }

    pub fn genes(&self) -> &GeneSet {
        &self.genes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[State] {
        &self.nodes
    }

    pub fn state(&self, id: NodeId) -> State {
        self.nodes[id]
    }

    pub fn id(&self, s: State) -> Option<NodeId> {
        self.ids.get(&s).copied()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, k: usize) -> Edge {
        self.edges[k]
    }

    pub fn neighbours(&self, v: NodeId) -> &[(NodeId, usize)] {
        &self.adjacency[v]
    }

    pub fn index(&self) -> &GeneEdgeIndex {
        &self.index
    }

    /// Both directions of every edge, in arc order.
    pub fn all_arcs(&self) -> Vec<Arc> {
        let mut arcs: Vec<Arc> = self
            .edges
            .iter()
            .flat_map(|e| {
                [
                    Arc {
                        from: e.a,
                        gene: e.gene,
                        to: e.b,
                    },
                    Arc {
                        from: e.b,
                        gene: e.gene,
                        to: e.a,
                    },
                ]
            })
            .collect();
        arcs.sort();
        arcs
    }

    /// Undirected connected components, largest first; ties broken by the
    /// smallest member. Members are sorted.
    pub fn connected_components(&self) -> Vec<Vec<NodeId>> {
        let mut comp = vec![usize::MAX; self.nodes.len()];
        let mut out: Vec<Vec<NodeId>> = Vec::new();
        for start in 0..self.nodes.len() {
            if comp[start] != usize::MAX {
                continue;
            }
            let c = out.len();
            let mut members = vec![start];
            comp[start] = c;
            let mut queue = VecDeque::from([start]);
            while let Some(v) = queue.pop_front() {
                for &(w, _) in &self.adjacency[v] {
                    if comp[w] == usize::MAX {
                        comp[w] = c;
                        members.push(w);
                        queue.push_back(w);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
        out
    }

    /// Component id per node, numbered as in [`StateGraph::connected_components`].
    pub fn component_ids(&self) -> Vec<usize> {
        let mut ids = vec![0; self.nodes.len()];
        for (c, members) in self.connected_components().iter().enumerate() {
            for &v in members {
                ids[v] = c;
            }
        }
        ids
    }
}

/// Which states of a labelled set feed synthesis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subset {
    #[default]
    All,
    /// The largest connected component only.
    LargestComponent,
    /// Every component containing an initial or a final state.
    Anchored,
}

impl std::str::FromStr for Subset {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "all" => Ok(Subset::All),
            "largest-component" | "largest" => Ok(Subset::LargestComponent),
            "anchored" => Ok(Subset::Anchored),
            other => Err(format!("unknown subset `{other}`")),
        }
    }
}

pub fn select_subset(set: &LabeledStateSet, subset: Subset) -> LabeledStateSet {
    if subset == Subset::All {
        return set.clone();
    }
    let g = StateGraph::from_state_set(set);
    let comps = g.connected_components();
    let keep: BTreeSet<State> = match subset {
        Subset::All => unreachable!(),
        Subset::LargestComponent => comps
            .first()
            .map(|c| c.iter().map(|&v| g.state(v)).collect())
            .unwrap_or_default(),
        Subset::Anchored => comps
            .iter()
            .filter(|c| {
                c.iter().any(|&v| {
                    let s = g.state(v);
                    set.initial.contains(&s) || set.final_states.contains(&s)
                })
            })
            .flat_map(|c| c.iter().map(|&v| g.state(v)))
            .collect(),
    };
    set.restrict(&keep)
}

/// Arcs retained after pruning, with out-lists in arc order.
#[derive(Clone, Debug)]
pub struct DirectedCandidateGraph {
    node_count: usize,
    arcs: Vec<Arc>,
    out: Vec<Vec<Arc>>,
}

impl DirectedCandidateGraph {
    pub fn new(node_count: usize, arcs: impl IntoIterator<Item = Arc>) -> Self {
        let set: BTreeSet<Arc> = arcs.into_iter().collect();
        let arcs: Vec<Arc> = set.into_iter().collect();
        let mut out = vec![Vec::new(); node_count];
        for a in &arcs {
            out[a.from].push(*a);
        }
        DirectedCandidateGraph {
            node_count,
            arcs,
            out,
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn out_arcs(&self, v: NodeId) -> &[Arc] {
        &self.out[v]
    }

    pub fn contains(&self, a: &Arc) -> bool {
        self.out[a.from].binary_search(a).is_ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn genes(n: usize) -> GeneSet {
        GeneSet::new((0..n).map(|i| format!("g{i}"))).unwrap()
    }

    fn st(bits: &str) -> State {
        State::from_bits(&bits.chars().map(|c| c == '1').collect::<Vec<_>>())
    }

    #[test]
    fn path_of_three_states() {
        // bit strings list gene 0 first
        let g = StateGraph::build(&genes(2), [st("00"), st("01"), st("11")]);
        assert_eq!(g.edges().len(), 2);
        let labelled: BTreeSet<(State, State, usize)> = g
            .edges()
            .iter()
            .map(|e| (g.state(e.a), g.state(e.b), e.gene))
            .collect();
        assert!(labelled.contains(&(st("00"), st("01"), 1)));
        assert!(labelled.contains(&(st("01"), st("11"), 0)));
        assert_eq!(g.connected_components().len(), 1);
    }

    #[test]
    fn single_state_is_in_every_n_i() {
        let g = StateGraph::build(&genes(3), [st("101")]);
        assert!(g.edges().is_empty());
        for i in 0..3 {
            assert_eq!(g.index().without_edge(i), &[0]);
        }
    }

    #[test]
    fn far_apart_states_are_singletons() {
        let g = StateGraph::build(&genes(4), [st("0000"), st("1100"), st("0011"), st("1111")]);
        assert!(g.edges().is_empty());
        assert_eq!(g.connected_components().len(), 4);
    }

    #[test]
    fn index_partitions_nodes() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let states: Vec<State> = (0..60).map(|_| State(rng.random_range(0..256))).collect();
        let g = StateGraph::build(&genes(8), states);
        for e in g.edges() {
            assert_eq!(g.state(e.a).hamming(g.state(e.b)), 1);
            assert_eq!(g.state(e.a).differing_gene(g.state(e.b)), Some(e.gene));
        }
        for i in 0..8 {
            let mut touched = vec![false; g.node_count()];
            for &k in g.index().edges(i) {
                touched[g.edge(k).a] = true;
                touched[g.edge(k).b] = true;
            }
            let without: BTreeSet<NodeId> = g.index().without_edge(i).iter().copied().collect();
            for v in 0..g.node_count() {
                assert!(touched[v] ^ without.contains(&v));
            }
        }
        // no duplicate undirected records
        let uniq: BTreeSet<(NodeId, NodeId)> = g.edges().iter().map(|e| (e.a, e.b)).collect();
        assert_eq!(uniq.len(), g.edges().len());
    }

    #[test]
    fn random_wide_states_have_no_neighbours() {
        // 3934 uniform samples over 33 genes: expected neighbour pairs
        // ~ C(3934,2) * 33 / 2^33 ~ 0.03
        let mut rng = ChaCha8Rng::seed_from_u64(2015);
        let states: Vec<State> = (0..3934).map(|_| State(rng.random_range(0..1u64 << 33))).collect();
        let g = StateGraph::build(&genes(33), states);
        assert!(g.edges().len() <= 1);
    }

    #[test]
    fn subsets() {
        let gs = genes(3);
        let set = LabeledStateSet::from_states(
            gs,
            [st("000"), st("100"), st("110"), st("011")],
            [st("000")],
            [st("011")],
        );
        assert_eq!(select_subset(&set, Subset::LargestComponent).len(), 3);
        assert_eq!(select_subset(&set, Subset::Anchored).len(), 4);
        assert_eq!(select_subset(&set, Subset::All).len(), 4);
    }
}
