use super::formula::Op;
use super::{MonotoneFormula, UpdateFunction};
use crate::error::{Error, Result};

/// Every canonical read-once monotone formula over a subset of `pool` with
/// between one and `max_leaves` genes.
pub fn enumerate_formulas(pool: &[usize], max_leaves: usize) -> Vec<MonotoneFormula> {
    let mut pool = pool.to_vec();
    pool.sort_unstable();
    pool.dedup();
    let mut out = Vec::new();
    for k in 1..=max_leaves.min(pool.len()) {
        for subset in combinations(&pool, k) {
            out.extend(over_exactly(&subset, None));
        }
    }
    out
}

fn combinations(pool: &[usize], k: usize) -> Vec<Vec<usize>> {
    fn go(pool: &[usize], k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..pool.len() {
            if pool.len() - i < k - cur.len() {
                break;
            }
            cur.push(pool[i]);
            go(pool, k, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(pool, k, 0, &mut Vec::new(), &mut out);
    out
}

/// Set partitions of `items` into at least two blocks, blocks ordered by
/// their first element.
fn partitions(items: &[usize]) -> Vec<Vec<Vec<usize>>> {
    fn go(items: &[usize], k: usize, blocks: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
        if k == items.len() {
            if blocks.len() >= 2 {
                out.push(blocks.clone());
            }
            return;
        }
        for b in 0..blocks.len() {
            blocks[b].push(items[k]);
            go(items, k + 1, blocks, out);
            blocks[b].pop();
        }
        blocks.push(vec![items[k]]);
        go(items, k + 1, blocks, out);
        blocks.pop();
    }
    let mut out = Vec::new();
    go(items, 0, &mut Vec::new(), &mut out);
    out
}

/// Formulas reading exactly the genes in `set` whose root operator is not
/// `forbid`.
fn over_exactly(set: &[usize], forbid: Option<Op>) -> Vec<MonotoneFormula> {
    if set.len() == 1 {
        return vec![MonotoneFormula::Gene(set[0])];
    }
    let mut out = Vec::new();
    for op in [Op::And, Op::Or] {
        if forbid == Some(op) {
            continue;
        }
        for blocks in partitions(set) {
            let options: Vec<Vec<MonotoneFormula>> =
                blocks.iter().map(|b| over_exactly(b, Some(op))).collect();
            let mut idx = vec![0usize; options.len()];
            loop {
                let children: Vec<MonotoneFormula> =
                    idx.iter().zip(&options).map(|(&i, o)| o[i].clone()).collect();
                out.push(match op {
                    Op::And => MonotoneFormula::And(children),
                    Op::Or => MonotoneFormula::Or(children),
                });
                // odometer
                let mut pos = 0;
                loop {
                    if pos == idx.len() {
                        break;
                    }
                    idx[pos] += 1;
                    if idx[pos] < options[pos].len() {
                        break;
                    }
                    idx[pos] = 0;
                    pos += 1;
                }
                if pos == idx.len() {
                    break;
                }
            }
        }
    }
    out
}

/// The finite space of update functions within activator/repressor bounds.
#[derive(Clone, Debug)]
pub struct FunctionSpace {
    activators: Vec<MonotoneFormula>,
    repressors: Vec<MonotoneFormula>,
}

impl FunctionSpace {
    pub fn new(
        activator_pool: &[usize],
        repressor_pool: &[usize],
        max_activators: usize,
        max_repressors: usize,
    ) -> Result<Self> {
        if max_activators == 0 || activator_pool.is_empty() {
            return Err(Error::Config(
                "an update function needs a non-empty activator pool and A >= 1".into(),
            ));
        }
        Ok(FunctionSpace {
            activators: enumerate_formulas(activator_pool, max_activators),
            repressors: enumerate_formulas(repressor_pool, max_repressors),
        })
    }

    pub fn len(&self) -> usize {
        self.activators
            .iter()
            .map(|a| {
                let m = a.support_mask();
                1 + self.repressors.iter().filter(|r| r.support_mask() & m == 0).count()
            })
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = UpdateFunction> + '_ {
        self.activators.iter().flat_map(move |a| {
            let m = a.support_mask();
            std::iter::once(None)
                .chain(
                    self.repressors
                        .iter()
                        .filter(move |r| r.support_mask() & m == 0)
                        .map(Some),
                )
                .map(move |r| UpdateFunction::new(a.clone(), r.cloned()))
        })
    }
}

/// Streams every canonical update function within the bounds, each once.
pub fn enumerate_functions(
    activator_pool: &[usize],
    repressor_pool: &[usize],
    max_activators: usize,
    max_repressors: usize,
) -> Result<impl Iterator<Item = UpdateFunction>> {
    let space = FunctionSpace::new(
        activator_pool,
        repressor_pool,
        max_activators,
        max_repressors,
    )?;
    let items: Vec<UpdateFunction> = space.iter().collect();
    Ok(items.into_iter())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{GeneSet, State};
    use std::collections::{BTreeSet, HashSet};

    /// Truth table of a formula over the first `n` genes.
    fn table(f: &dyn Fn(State) -> bool, n: usize) -> Vec<bool> {
        (0..1u64 << n).map(|m| f(State(m))).collect()
    }

    #[derive(Clone)]
    enum Tree {
        Leaf(usize),
        And(Box<Tree>, Box<Tree>),
        Or(Box<Tree>, Box<Tree>),
    }

    impl Tree {
        fn eval(&self, s: State) -> bool {
            match self {
                Tree::Leaf(g) => s.get(*g),
                Tree::And(a, b) => a.eval(s) && b.eval(s),
                Tree::Or(a, b) => a.eval(s) || b.eval(s),
            }
        }
    }

    /// All binary trees over every ordered sequence of distinct genes.
    fn naive_trees(pool: &[usize], max_leaves: usize) -> Vec<Tree> {
        fn trees_over(seq: &[usize]) -> Vec<Tree> {
            if seq.len() == 1 {
                return vec![Tree::Leaf(seq[0])];
            }
            let mut out = Vec::new();
            for split in 1..seq.len() {
                for l in trees_over(&seq[..split]) {
                    for r in trees_over(&seq[split..]) {
                        out.push(Tree::And(Box::new(l.clone()), Box::new(r.clone())));
                        out.push(Tree::Or(Box::new(l.clone()), Box::new(r.clone())));
                    }
                }
            }
            out
        }
        fn sequences(pool: &[usize], k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if cur.len() == k {
                out.push(cur.clone());
                return;
            }
            for &g in pool {
                if !cur.contains(&g) {
                    cur.push(g);
                    sequences(pool, k, cur, out);
                    cur.pop();
                }
            }
        }
        let mut out = Vec::new();
        for k in 1..=max_leaves.min(pool.len()) {
            let mut seqs = Vec::new();
            sequences(pool, k, &mut Vec::new(), &mut seqs);
            for s in seqs {
                out.extend(trees_over(&s));
            }
        }
        out
    }

    #[test]
    fn small_pools() {
        let fs: Vec<_> = enumerate_functions(&[0], &[], 1, 0).unwrap().collect();
        assert_eq!(fs.len(), 1);
        let g = GeneSet::new(["A", "B"]).unwrap();
        let fs: Vec<String> = enumerate_functions(&[0, 1], &[], 2, 0)
            .unwrap()
            .map(|f| f.display(&g))
            .collect();
        let got: BTreeSet<_> = fs.iter().map(String::as_str).collect();
        let want: BTreeSet<_> = ["A", "B", "(A & B)", "(A | B)"].into_iter().collect();
        assert_eq!(got, want);
    }

    #[test]
    fn empty_activator_pool_is_an_error() {
        assert!(enumerate_functions(&[], &[0], 1, 1).is_err());
        assert!(enumerate_functions(&[0], &[0], 0, 1).is_err());
    }

    #[test]
    fn read_once_counts_per_leaf_count() {
        // 1, 2, 8, 52 labelled read-once monotone formulas on k leaves
        for (k, want) in [(1usize, 1usize), (2, 2), (3, 8), (4, 52)] {
            let set: Vec<usize> = (0..k).collect();
            assert_eq!(over_exactly(&set, None).len(), want, "k = {k}");
        }
    }

    #[test]
    fn canonical_formulas_match_semantic_dedup_of_naive_trees() {
        for n in 1..=4usize {
            let pool: Vec<usize> = (0..n).collect();
            for max in 1..=n {
                let canon = enumerate_formulas(&pool, max);
                let canon_tables: Vec<Vec<bool>> =
                    canon.iter().map(|f| table(&|s| f.eval(s), n)).collect();
                let distinct: HashSet<&Vec<bool>> = canon_tables.iter().collect();
                assert_eq!(distinct.len(), canon.len(), "duplicate semantics n={n} max={max}");
                let naive: HashSet<Vec<bool>> = naive_trees(&pool, max)
                    .iter()
                    .map(|t| table(&|s| t.eval(s), n))
                    .collect();
                assert_eq!(naive, distinct.into_iter().cloned().collect());
            }
        }
    }

    #[test]
    fn disjoint_pools_give_semantically_unique_functions() {
        let fs: Vec<_> = enumerate_functions(&[0, 1], &[2, 3], 2, 2).unwrap().collect();
        let tables: HashSet<Vec<bool>> = fs.iter().map(|f| table(&|s| f.evaluate(s), 4)).collect();
        assert_eq!(tables.len(), fs.len());
        assert_eq!(fs.len(), 4 * 5);
    }

    #[test]
    fn contains_gata2_rule() {
        let g = GeneSet::new([
            "Gata2", "Gata1", "Fog1", "EKLF", "Fli1", "Scl", "Cebpa", "Pu.1", "cJun", "EgrNab",
            "Gfi1",
        ])
        .unwrap();
        let all: Vec<usize> = (0..11).collect();
        let want = UpdateFunction::parse("Gata2 & !(Pu.1 | (Gata1 & Fog1))", &g).unwrap();
        assert!(enumerate_functions(&[0], &all, 1, 3)
            .unwrap()
            .any(|f| f == want));
    }
}
