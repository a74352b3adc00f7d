//! Cardinality encodings: sequential counters and sorting networks.

use super::Session;
use crate::sat::Lit;

/// Unary counter over a literal list: `outputs[j]` is forced true whenever
/// more than `j` inputs are true. Assuming `!outputs[k]` therefore bounds
/// the count by `k`, for any `k` below the capacity.
pub struct Counter {
    outputs: Vec<Lit>,
    inputs: usize,
}

impl Counter {
    /// Counter able to express "at most k" for every `k <= capacity`.
    pub fn new(s: &mut Session, xs: &[Lit], capacity: usize) -> Self {
        let width = (capacity + 1).min(xs.len());
        let mut prev: Vec<Lit> = Vec::new();
        for (i, &x) in xs.iter().enumerate() {
            let cols = width.min(i + 1);
            let mut cur = Vec::with_capacity(cols);
            for j in 0..cols {
                let r = s.fresh();
                if j == 0 {
                    s.add(&[!x, r]);
                } else {
                    s.add(&[!x, !prev[j - 1], r]);
                }
                if j < prev.len() {
                    s.add(&[!prev[j], r]);
                }
                cur.push(r);
            }
            prev = cur;
        }
        Counter {
            outputs: prev,
            inputs: xs.len(),
        }
    }

    /// Largest `k` for which [`Counter::at_most`] yields a bound.
    pub fn capacity(&self) -> usize {
        if self.outputs.len() >= self.inputs {
            usize::MAX
        } else {
            self.outputs.len() - 1
        }
    }

    /// Literal asserting that at most `k` inputs are true, or `None` if the
    /// bound is trivially satisfied.
    pub fn at_most(&self, k: usize) -> Option<Lit> {
        if k >= self.inputs {
            return None;
        }
        assert!(
            k < self.outputs.len(),
            "counter built for capacity {} cannot bound at {k}",
            self.outputs.len().saturating_sub(1)
        );
        Some(!self.outputs[k])
    }
}

/// Batcher odd-even merge sorting network over a literal list. Output `k`
/// (0-based, descending) is equivalent to "more than `k` inputs are true",
/// so one network answers every threshold.
pub struct Sorter {
    outputs: Vec<Lit>,
}

impl Sorter {
    pub fn new(s: &mut Session, xs: &[Lit]) -> Self {
        let size = xs.len().next_power_of_two();
        let mut v = xs.to_vec();
        v.resize(size, s.constant(false));
        sort(s, &mut v, 0, size);
        v.truncate(xs.len());
        Sorter { outputs: v }
    }

    pub fn inputs(&self) -> usize {
        self.outputs.len()
    }

    /// Literal equivalent to "at least `k` inputs are true".
    pub fn at_least(&self, s: &Session, k: usize) -> Lit {
        match k {
            0 => s.constant(true),
            k if k > self.outputs.len() => s.constant(false),
            k => self.outputs[k - 1],
        }
    }
}

/// Weighted "at least" over `(literal, weight)` terms as a shared decision
/// diagram: node `(i, k)` stands for "the terms from `i` on weigh at least
/// `k`". Small when there are few distinct terms.
pub struct WeightedAtLeast {
    terms: Vec<(Lit, usize)>,
    /// `suffix[i]` = total weight of `terms[i..]`.
    suffix: Vec<usize>,
    memo: std::collections::HashMap<(usize, usize), Lit>,
}

impl WeightedAtLeast {
    pub fn new(mut terms: Vec<(Lit, usize)>) -> Self {
        terms.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        let mut suffix = vec![0; terms.len() + 1];
        for i in (0..terms.len()).rev() {
            suffix[i] = suffix[i + 1] + terms[i].1;
        }
        WeightedAtLeast {
            terms,
            suffix,
            memo: Default::default(),
        }
    }

    /// Literal equivalent to "the true terms weigh at least `k`".
    pub fn at_least(&mut self, s: &mut Session, k: usize) -> Lit {
        self.node(s, 0, k)
    }

    fn node(&mut self, s: &mut Session, i: usize, k: usize) -> Lit {
        if k == 0 {
            return s.constant(true);
        }
        if self.suffix[i] < k {
            return s.constant(false);
        }
        if let Some(&l) = self.memo.get(&(i, k)) {
            return l;
        }
        let (x, w) = self.terms[i];
        let hi = self.node(s, i + 1, k.saturating_sub(w));
        let lo = self.node(s, i + 1, k);
        let o = if hi == lo {
            hi
        } else {
            let a = s.and(&[x, hi]);
            let b = s.and(&[!x, lo]);
            s.or(&[a, b])
        };
        self.memo.insert((i, k), o);
        o
    }
}

fn compare(s: &mut Session, v: &mut [Lit], i: usize, j: usize) {
    let hi = s.or(&[v[i], v[j]]);
    let lo = s.and(&[v[i], v[j]]);
    v[i] = hi;
    v[j] = lo;
}

fn sort(s: &mut Session, v: &mut [Lit], lo: usize, n: usize) {
    if n > 1 {
        let m = n / 2;
        sort(s, v, lo, m);
        sort(s, v, lo + m, m);
        merge(s, v, lo, n, 1);
    }
}

fn merge(s: &mut Session, v: &mut [Lit], lo: usize, n: usize, r: usize) {
    let m = r * 2;
    if m < n {
        merge(s, v, lo, n, m);
        merge(s, v, lo + r, n, m);
        let mut i = lo + r;
        while i + r < lo + n {
            compare(s, v, i, i + r);
            i += m;
        }
    } else {
        compare(s, v, lo, lo + r);
    }
}

/// Literal implying at least `t` of `xs` are true; the registers only ever
/// under-count.
pub(super) fn at_least(s: &mut Session, xs: &[Lit], t: usize) -> Lit {
    // r[j] after processing i inputs: "at least j+1 of x_0..x_i are true"
    let mut prev: Vec<Lit> = Vec::new();
    for (i, &x) in xs.iter().enumerate() {
        let cols = t.min(i + 1);
        let mut cur = Vec::with_capacity(cols);
        for j in 0..cols {
            let r = s.fresh();
            let carried = prev.get(j).copied();
            if j == 0 {
                // r -> carried ∨ x
                let mut c = vec![!r, x];
                c.extend(carried);
                s.add(&c);
            } else {
                // r -> carried ∨ (x ∧ prev[j-1])
                let below = prev[j - 1];
                let mut c1 = vec![!r, x];
                let mut c2 = vec![!r, below];
                if let Some(c) = carried {
                    c1.push(c);
                    c2.push(c);
                }
                s.add(&c1);
                s.add(&c2);
            }
            cur.push(r);
        }
        prev = cur;
    }
    prev[t - 1]
}
