//! Initial-to-final path selection over the pruned graph.

use std::collections::{BTreeSet, HashSet, VecDeque};

use crate::graph::{Arc, DirectedCandidateGraph, NodeId};

/// Loopless path: a start node followed by arcs.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Path {
    pub start: NodeId,
    pub arcs: Vec<Arc>,
}

impl Path {
    pub fn len(&self) -> usize {
        self.arcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }

    pub fn end(&self) -> NodeId {
        self.arcs.last().map_or(self.start, |a| a.to)
    }

    pub fn nodes(&self) -> Vec<NodeId> {
        std::iter::once(self.start)
            .chain(self.arcs.iter().map(|a| a.to))
            .collect()
    }
}

/// Breadth-first search from `sources` (tried in the given order) to
/// `target`. Out-arcs are explored in arc order and the first discoverer
/// of a node becomes its parent.
fn bfs(
    d: &DirectedCandidateGraph,
    sources: &[NodeId],
    target: NodeId,
    node_ok: &dyn Fn(NodeId) -> bool,
    arc_ok: &dyn Fn(&Arc) -> bool,
) -> Option<Path> {
    let mut parent: Vec<Option<Arc>> = vec![None; d.node_count()];
    let mut seen = vec![false; d.node_count()];
    let mut queue = VecDeque::new();
    for &s in sources {
        if node_ok(s) && !seen[s] {
            seen[s] = true;
            queue.push_back(s);
        }
    }
    while let Some(v) = queue.pop_front() {
        if v == target {
            let mut arcs = Vec::new();
            let mut cur = v;
            while let Some(a) = parent[cur] {
                arcs.push(a);
                cur = a.from;
            }
            arcs.reverse();
            return Some(Path { start: cur, arcs });
        }
        for a in d.out_arcs(v) {
            if !seen[a.to] && node_ok(a.to) && arc_ok(a) {
                seen[a.to] = true;
                parent[a.to] = Some(*a);
                queue.push_back(a.to);
            }
        }
    }
    None
}

/// Shortest path from the nearest initial node to `target`.
pub fn shortest_path(d: &DirectedCandidateGraph, initial: &[NodeId], target: NodeId) -> Option<Path> {
    let mut sources = initial.to_vec();
    sources.sort_unstable();
    bfs(d, &sources, target, &|_| true, &|_| true)
}

/// Lazily extended list of loopless paths from any initial node to one
/// target, in nondecreasing length (Yen's algorithm over a virtual source
/// joined to every initial node). The first path is the breadth-first one.
pub struct KShortest<'a> {
    d: &'a DirectedCandidateGraph,
    initial: Vec<NodeId>,
    target: NodeId,
    max_len: Option<usize>,
    found: Vec<Path>,
    candidates: BTreeSet<(usize, Path)>,
    excluded: HashSet<Arc>,
    exhausted: bool,
}

impl<'a> KShortest<'a> {
    pub fn new(d: &'a DirectedCandidateGraph, initial: &[NodeId], target: NodeId, max_len: Option<usize>) -> Self {
        let mut initial = initial.to_vec();
        initial.sort_unstable();
        initial.dedup();
        KShortest {
            d,
            initial,
            target,
            max_len,
            found: Vec::new(),
            candidates: BTreeSet::new(),
            excluded: HashSet::new(),
            exhausted: false,
        }
    }

    /// Like [`KShortest::new`], over the graph without `excluded`.
    pub fn avoiding(
        d: &'a DirectedCandidateGraph,
        initial: &[NodeId],
        target: NodeId,
        max_len: Option<usize>,
        excluded: HashSet<Arc>,
    ) -> Self {
        KShortest {
            excluded,
            ..Self::new(d, initial, target, max_len)
        }
    }

    /// Fresh enumeration to the same target that never uses `excluded`.
    pub fn without(&self, excluded: HashSet<Arc>) -> KShortest<'a> {
        Self::avoiding(self.d, &self.initial, self.target, self.max_len, excluded)
    }

    pub fn target(&self) -> NodeId {
        self.target
    }

    /// Paths produced so far.
    pub fn found(&self) -> &[Path] {
        &self.found
    }

    /// The `k`-th shortest path (0-based), computing it if needed.
    pub fn get(&mut self, k: usize) -> Option<&Path> {
        while self.found.len() <= k && !self.exhausted {
            self.advance();
        }
        self.found.get(k)
    }

    fn within_bound(&self, p: &Path) -> bool {
        self.max_len.is_none_or(|m| p.len() <= m)
    }

    fn advance(&mut self) {
        let next = if self.found.is_empty() {
            bfs(self.d, &self.initial, self.target, &|_| true, &|a| !self.excluded.contains(a))
        } else {
            self.spur_from_last();
            self.candidates.pop_first().map(|(_, p)| p)
        };
        match next {
            Some(p) if self.within_bound(&p) => self.found.push(p),
            _ => self.exhausted = true,
        }
    }

    fn spur_from_last(&mut self) {
        let last = self.found.last().expect("called after the first path").clone();
        let nodes = last.nodes();
        // spur at the virtual source (j = 0) or at path node j - 1
        for j in 0..=last.len() {
            let root_nodes = &nodes[..j];
            let root_arcs = &last.arcs[..j.saturating_sub(1)];
            let mut banned_starts: HashSet<NodeId> = HashSet::new();
            let mut banned_arcs: HashSet<Arc> = HashSet::new();
            for p in &self.found {
                let pn = p.nodes();
                if pn.len() > j && pn[..j] == *root_nodes {
                    if j == 0 {
                        banned_starts.insert(p.start);
                    } else if let Some(a) = p.arcs.get(j - 1) {
                        banned_arcs.insert(*a);
                    }
                }
            }
            let banned_nodes: HashSet<NodeId> = root_nodes.iter().copied().collect();
            let spur = if j == 0 {
                let sources: Vec<NodeId> = self
                    .initial
                    .iter()
                    .copied()
                    .filter(|s| !banned_starts.contains(s))
                    .collect();
                bfs(self.d, &sources, self.target, &|_| true, &|a| {
                    !banned_arcs.contains(a) && !self.excluded.contains(a)
                })
            } else {
                let spur_node = nodes[j - 1];
                bfs(
                    self.d,
                    &[spur_node],
                    self.target,
                    &|v| v == spur_node || !banned_nodes.contains(&v),
                    &|a| !banned_arcs.contains(a) && !self.excluded.contains(a),
                )
            };
            let Some(spur) = spur else { continue };
            let path = if j == 0 {
                spur
            } else {
                let mut arcs = root_arcs.to_vec();
                arcs.extend(spur.arcs);
                Path {
                    start: last.start,
                    arcs,
                }
            };
            if !self.found.contains(&path) {
                self.candidates.insert((path.len(), path));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arc(from: NodeId, to: NodeId) -> Arc {
        Arc { from, gene: 0, to }
    }

    fn diamond() -> DirectedCandidateGraph {
        // 0 -> 1 -> 3, 0 -> 2 -> 3
        DirectedCandidateGraph::new(4, [arc(0, 1), arc(1, 3), arc(0, 2), arc(2, 3)])
    }

    #[test]
    fn diamond_tie_break() {
        let p = shortest_path(&diamond(), &[0], 3).unwrap();
        assert_eq!(p.nodes(), vec![0, 1, 3]);
    }

    #[test]
    fn unreachable_target() {
        let d = DirectedCandidateGraph::new(3, [arc(0, 1)]);
        assert!(shortest_path(&d, &[0], 2).is_none());
        let mut ks = KShortest::new(&d, &[0], 2, None);
        assert!(ks.get(0).is_none());
    }

    #[test]
    fn initial_target_is_empty_path() {
        let p = shortest_path(&diamond(), &[3, 0], 3).unwrap();
        assert!(p.is_empty());
        assert_eq!(p.start, 3);
    }

    #[test]
    fn yen_on_diamond() {
        let d = diamond();
        let mut ks = KShortest::new(&d, &[0], 3, None);
        assert_eq!(ks.get(1).unwrap().nodes(), vec![0, 2, 3]);
        assert!(ks.get(2).is_none());
    }

    #[test]
    fn excluded_arcs_are_never_used() {
        let d = diamond();
        let first = KShortest::new(&d, &[0], 3, None).get(0).cloned().unwrap();
        let banned = first.arcs[0];
        let mut k = KShortest::avoiding(&d, &[0], 3, None, [banned].into_iter().collect());
        let p = k.get(0).cloned().unwrap();
        assert!(!p.arcs.contains(&banned));
        assert!(k.get(1).is_none());
    }

    #[test]
    fn max_len_stops_enumeration() {
        // 0 -> 3 directly, or 0 -> 1 -> 2 -> 3
        let d = DirectedCandidateGraph::new(4, [arc(0, 3), arc(0, 1), arc(1, 2), arc(2, 3)]);
        let mut ks = KShortest::new(&d, &[0], 3, Some(2));
        assert_eq!(ks.get(0).unwrap().len(), 1);
        assert!(ks.get(1).is_none());
    }
}
