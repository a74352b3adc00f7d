//! Symbolic encoding of the space of update functions `f1 ∧ ¬f2`.
//!
//! Each monotone formula is a heap-indexed array of slots (slot `k` has
//! children `2k` and `2k+1`); every slot selects one of AND, OR, a gene
//! from the pool, or nothing. Structural constraints admit exactly one
//! assignment per canonical formula:
//!
//! * an operator slot has both children in use, any other slot has none;
//! * the left child never repeats its parent's operator, so n-ary
//!   operators appear as right-leaning chains;
//! * every gene of the left subtree's minimum is smaller than every gene
//!   of the right subtree (operands sorted by smallest gene);
//! * each gene occurs at most once per formula, and at most the bound
//!   number of leaves is used;
//! * no gene is both an activator and a repressor of one function.

use std::collections::HashMap;

use super::{Counter, Session};
use crate::error::{Error, Result};
use crate::model::{MonotoneFormula, State, UpdateFunction};
use crate::sat::Lit;

/// Bounds and pools for one gene's update function.
#[derive(Clone, Copy, Debug)]
pub struct TemplateSpec<'a> {
    pub activators: &'a [usize],
    pub repressors: &'a [usize],
    pub max_activators: usize,
    pub max_repressors: usize,
}

/// Largest supported formula depth; slot arrays hold `2^depth - 1` slots.
const MAX_LEVELS: usize = 10;

struct Slot {
    ops: Option<(Lit, Lit)>,
    leaves: Vec<Lit>,
}

struct FormulaSlots {
    pool: Vec<usize>,
    slots: Vec<Slot>,
    mask: u64,
    bound: usize,
    cache: HashMap<u64, Lit>,
}

impl FormulaSlots {
    fn children(&self, idx: usize) -> Option<(usize, usize)> {
        let r = 2 * idx + 2;
        (r < self.slots.len()).then_some((r - 1, r))
    }

    fn encode(s: &mut Session, pool: &[usize], bound: usize, present: Lit) -> Result<Self> {
        let mut pool = pool.to_vec();
        pool.sort_unstable();
        pool.dedup();
        let levels = bound.min(pool.len());
        if levels > MAX_LEVELS {
            return Err(Error::Config(format!(
                "formula bound {levels} exceeds the supported maximum of {MAX_LEVELS}"
            )));
        }
        let n = (1usize << levels) - 1;
        let mask = pool.iter().fold(0u64, |m, g| m | 1 << g);
        let mut f = FormulaSlots {
            pool,
            slots: Vec::with_capacity(n),
            mask,
            bound,
            cache: HashMap::new(),
        };
        if n == 0 {
            s.add(&[!present]);
            return Ok(f);
        }
        let mut used = Vec::with_capacity(n);
        for idx in 0..n {
            let ops = (2 * idx + 2 < n).then(|| (s.fresh(), s.fresh()));
            let leaves: Vec<Lit> = (0..f.pool.len()).map(|_| s.fresh()).collect();
            let mut all: Vec<Lit> = leaves.clone();
            if let Some((a, o)) = ops {
                all.push(a);
                all.push(o);
            }
            s.at_most_one(&all);
            used.push(s.or(&all));
            f.slots.push(Slot { ops, leaves });
        }
        s.add(&[!present, used[0]]);
        s.add(&[present, !used[0]]);
        for idx in 0..n {
            let Some((l, r)) = f.children(idx) else { continue };
            let (and, or) = f.slots[idx].ops.unwrap();
            for ch in [l, r] {
                s.add(&[!and, used[ch]]);
                s.add(&[!or, used[ch]]);
                s.add(&[!used[ch], and, or]);
            }
            if let Some((land, lor)) = f.slots[l].ops {
                s.add(&[!and, !land]);
                s.add(&[!or, !lor]);
            }
        }
        // contains[idx][p]: subtree at idx reads pool gene p
        let m = f.pool.len();
        let mut contains: Vec<Vec<Lit>> = vec![Vec::new(); n];
        for idx in (0..n).rev() {
            contains[idx] = match f.children(idx) {
                None => f.slots[idx].leaves.clone(),
                Some((l, r)) => (0..m)
                    .map(|p| s.or(&[f.slots[idx].leaves[p], contains[l][p], contains[r][p]]))
                    .collect(),
            };
        }
        for p in 0..m {
            let occurrences: Vec<Lit> = f.slots.iter().map(|sl| sl.leaves[p]).collect();
            s.at_most_one(&occurrences);
        }
        for idx in 0..n {
            let Some((l, r)) = f.children(idx) else { continue };
            // below[p]: left subtree reads some gene before p
            let mut below = s.constant(false);
            for p in 0..m {
                s.add(&[!contains[r][p], below]);
                below = s.or(&[below, contains[l][p]]);
            }
        }
        if levels >= 3 && levels == bound {
            let is_leaf: Vec<Lit> = f.slots.iter().map(|sl| s.or(&sl.leaves)).collect();
            let c = Counter::new(s, &is_leaf, bound);
            if let Some(l) = c.at_most(bound) {
                s.add(&[l]);
            }
        }
        Ok(f)
    }

    /// Literal true iff the formula has a leaf for `gene`.
    fn reads(&self, s: &mut Session, gene: usize) -> Option<Lit> {
        let p = self.pool.binary_search(&gene).ok()?;
        let occurrences: Vec<Lit> = self.slots.iter().map(|sl| sl.leaves[p]).collect();
        Some(s.or(&occurrences))
    }

    fn selectors(&self) -> Vec<Lit> {
        let mut out = Vec::new();
        for sl in &self.slots {
            if let Some((a, o)) = sl.ops {
                out.push(a);
                out.push(o);
            }
            out.extend(&sl.leaves);
        }
        out
    }

    /// Literal equal to the formula's value at `state` (false when unused).
    fn value(&mut self, s: &mut Session, state: State) -> Lit {
        if self.slots.is_empty() {
            return s.constant(false);
        }
        let key = state.0 & self.mask;
        if let Some(&l) = self.cache.get(&key) {
            return l;
        }
        let n = self.slots.len();
        let mut val = vec![s.constant(false); n];
        for idx in (0..n).rev() {
            let on: Vec<Lit> = self.slots[idx]
                .leaves
                .iter()
                .zip(&self.pool)
                .filter(|(_, &g)| state.get(g))
                .map(|(&l, _)| l)
                .collect();
            let leaf_val = s.or(&on);
            val[idx] = match (self.children(idx), self.slots[idx].ops) {
                (Some((l, r)), Some((and, or))) => {
                    let a = s.and(&[and, val[l], val[r]]);
                    let either = s.or(&[val[l], val[r]]);
                    let o = s.and(&[or, either]);
                    s.or(&[leaf_val, a, o])
                }
                _ => leaf_val,
            };
        }
        self.cache.insert(key, val[0]);
        val[0]
    }

    /// Selector literals true for `f`; `None` if `f` is outside the template.
    fn place(&self, f: &MonotoneFormula, idx: usize, chosen: &mut Vec<Lit>) -> Option<()> {
        let sl = self.slots.get(idx)?;
        match f {
            MonotoneFormula::Gene(g) => {
                let p = self.pool.binary_search(g).ok()?;
                chosen.push(sl.leaves[p]);
                Some(())
            }
            MonotoneFormula::And(xs) | MonotoneFormula::Or(xs) => {
                let (and, or) = sl.ops?;
                let (l, r) = self.children(idx)?;
                chosen.push(if matches!(f, MonotoneFormula::And(_)) { and } else { or });
                self.place(&xs[0], l, chosen)?;
                let rest = if xs.len() == 2 {
                    xs[1].clone()
                } else if matches!(f, MonotoneFormula::And(_)) {
                    MonotoneFormula::and(xs[1..].to_vec()).ok()?
                } else {
                    MonotoneFormula::or(xs[1..].to_vec()).ok()?
                };
                self.place(&rest, r, chosen)
            }
        }
    }

    fn decode(&self, value: &dyn Fn(Lit) -> bool) -> Option<MonotoneFormula> {
        if self.slots.is_empty() {
            return None;
        }
        self.decode_slot(0, value)
    }

    fn decode_slot(&self, idx: usize, value: &dyn Fn(Lit) -> bool) -> Option<MonotoneFormula> {
        let sl = &self.slots[idx];
        if let Some(p) = sl.leaves.iter().position(|&l| value(l)) {
            return Some(MonotoneFormula::Gene(self.pool[p]));
        }
        let (and, or) = sl.ops?;
        let (l, r) = self.children(idx)?;
        let operands = vec![self.decode_slot(l, value)?, self.decode_slot(r, value)?];
        if value(and) {
            MonotoneFormula::and(operands).ok()
        } else if value(or) {
            MonotoneFormula::or(operands).ok()
        } else {
            None
        }
    }
}

/// Symbolic update function of one gene inside a [`Session`].
pub struct FunctionTemplate {
    gene: usize,
    act: FormulaSlots,
    rep: FormulaSlots,
    rep_present: Lit,
    out_cache: HashMap<u64, Lit>,
}

impl FunctionTemplate {
    pub fn encode(s: &mut Session, gene: usize, spec: TemplateSpec<'_>) -> Result<Self> {
        if spec.max_activators == 0 || spec.activators.is_empty() {
            return Err(Error::Config(format!(
                "gene {gene}: an update function needs a non-empty activator pool and A >= 1"
            )));
        }
        let yes = s.constant(true);
        let act = FormulaSlots::encode(s, spec.activators, spec.max_activators, yes)?;
        let rep_present = if spec.max_repressors == 0 || spec.repressors.is_empty() {
            s.constant(false)
        } else {
            s.fresh()
        };
        let rep = FormulaSlots::encode(s, spec.repressors, spec.max_repressors, rep_present)?;
        for &g in &act.pool {
            if let (Some(a), Some(r)) = (act.reads(s, g), rep.reads(s, g)) {
                s.add(&[!a, !r]);
            }
        }
        Ok(FunctionTemplate {
            gene,
            act,
            rep,
            rep_present,
            out_cache: HashMap::new(),
        })
    }

    pub fn gene(&self) -> usize {
        self.gene
    }

    /// Literal equal to `u(state)`.
    pub fn output(&mut self, s: &mut Session, state: State) -> Lit {
        let key = state.0 & (self.act.mask | self.rep.mask);
        if let Some(&l) = self.out_cache.get(&key) {
            return l;
        }
        let a = self.act.value(s, state);
        let r = self.rep.value(s, state);
        let out = s.and(&[a, !r]);
        self.out_cache.insert(key, out);
        out
    }

    /// Literal that holds iff `u(state) == expected`; usable as a hard unit
    /// or as a retractable assumption.
    pub fn application(&mut self, s: &mut Session, state: State, expected: bool) -> Lit {
        let out = self.output(s, state);
        if expected {
            out
        } else {
            !out
        }
    }

    /// Selector literals that determine the function; the projection for
    /// model enumeration.
    pub fn projection(&self) -> Vec<Lit> {
        let mut out = self.act.selectors();
        out.extend(self.rep.selectors());
        out.push(self.rep_present);
        out
    }

    /// Assumptions fixing the template to `f`, or `None` when `f` is not
    /// expressible within the pools and bounds.
    pub fn pin(&self, f: &UpdateFunction) -> Option<Vec<Lit>> {
        let mut chosen = Vec::new();
        self.act.place(f.activators(), 0, &mut chosen)?;
        if let Some(r) = f.repressors() {
            self.rep.place(r, 0, &mut chosen)?;
            chosen.push(self.rep_present);
        }
        let fits = f.activators().support_mask() & f.repressors().map_or(0, |r| r.support_mask()) == 0
            && f.activators().leaf_count() <= self.act.bound
            && f.repressors().map_or(0, |r| r.leaf_count()) <= self.rep.bound;
        if !fits {
            return None;
        }
        let on: std::collections::HashSet<Lit> = chosen.into_iter().collect();
        Some(
            self.projection()
                .into_iter()
                .map(|l| if on.contains(&l) { l } else { !l })
                .collect(),
        )
    }

    /// Function chosen by the last model.
    pub fn decode(&self, s: &Session) -> UpdateFunction {
        self.decode_with(&|l| s.value(l))
    }

    /// Function encoded by values of [`FunctionTemplate::projection`].
    pub fn decode_projected(&self, values: &[bool]) -> UpdateFunction {
        let map: HashMap<Lit, bool> = self.projection().into_iter().zip(values.iter().copied()).collect();
        self.decode_with(&|l| map.get(&l).copied().unwrap_or(false))
    }

    fn decode_with(&self, value: &dyn Fn(Lit) -> bool) -> UpdateFunction {
        let act = self
            .act
            .decode(value)
            .expect("activator formula is always present in a model");
        let rep = if value(self.rep_present) {
            self.rep.decode(value)
        } else {
            None
        };
        UpdateFunction::new(act, rep)
    }
}
