//! Constraint-solving session over the embedded CDCL engine, with the
//! helpers shared by both synthesis modes: Tseitin gates, cardinality
//! constraints, projected model enumeration and unsat cores.

mod card;
mod template;

use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::sat::{Lit, SolveResult, Solver};

pub use card::{Counter, Sorter, WeightedAtLeast};
pub use template::{FunctionTemplate, TemplateSpec};

/// Outcome of adding an at-least constraint.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cardinality {
    Added,
    /// `t` exceeded the number of literals; the session is now unsatisfiable.
    Infeasible,
}

pub struct Session {
    sat: Solver,
    truth: Lit,
    dump: Option<DumpTarget>,
}

struct DumpTarget {
    dir: PathBuf,
    prefix: String,
    count: usize,
}

impl Default for Session {
    fn default() -> Self {
        Self::new()
    }
}

impl Session {
    pub fn new() -> Self {
        let mut sat = Solver::new();
        let t = sat.new_var().pos();
        sat.add_clause(&[t]);
        Session {
            sat,
            truth: t,
            dump: None,
        }
    }

    /// Write every query as a DIMACS file `<dir>/<prefix>-<n>.cnf`.
    pub fn dump_queries(&mut self, dir: impl Into<PathBuf>, prefix: &str) {
        self.sat.record_clauses(true);
        self.dump = Some(DumpTarget {
            dir: dir.into(),
            prefix: prefix.to_string(),
            count: 0,
        });
    }

    pub fn fresh(&mut self) -> Lit {
        self.sat.new_var().pos()
    }

    pub fn constant(&self, value: bool) -> Lit {
        if value {
            self.truth
        } else {
            !self.truth
        }
    }

    fn is_const(&self, l: Lit) -> Option<bool> {
        if l == self.truth {
            Some(true)
        } else if l == !self.truth {
            Some(false)
        } else {
            None
        }
    }

    pub fn add(&mut self, clause: &[Lit]) {
        self.sat.add_clause(clause);
    }

    pub fn num_vars(&self) -> usize {
        self.sat.num_vars()
    }

    pub fn num_clauses(&self) -> usize {
        self.sat.num_clauses()
    }

    pub fn solver_stats(&self) -> crate::sat::Stats {
        self.sat.stats()
    }

    /// `o ↔ ∧ lits`.
    pub fn and(&mut self, lits: &[Lit]) -> Lit {
        let mut ls = Vec::with_capacity(lits.len());
        for &l in lits {
            match self.is_const(l) {
                Some(true) => {}
                Some(false) => return self.constant(false),
                None => ls.push(l),
            }
        }
        ls.sort_unstable();
        ls.dedup();
        if ls.windows(2).any(|w| w[0] == !w[1]) {
            return self.constant(false);
        }
        match ls.len() {
            0 => self.constant(true),
            1 => ls[0],
            _ => {
                let o = self.fresh();
                let mut big = vec![o];
                for &l in &ls {
                    self.add(&[!o, l]);
                    big.push(!l);
                }
                self.add(&big);
                o
            }
        }
    }

    /// `o ↔ ∨ lits`.
    pub fn or(&mut self, lits: &[Lit]) -> Lit {
        let neg: Vec<Lit> = lits.iter().map(|&l| !l).collect();
        !self.and(&neg)
    }

    /// `o ↔ (a ↔ b)`.
    pub fn iff(&mut self, a: Lit, b: Lit) -> Lit {
        match (self.is_const(a), self.is_const(b)) {
            (Some(x), _) => return if x { b } else { !b },
            (_, Some(y)) => return if y { a } else { !a },
            _ => {}
        }
        let o = self.fresh();
        self.add(&[!o, !a, b]);
        self.add(&[!o, a, !b]);
        self.add(&[o, a, b]);
        self.add(&[o, !a, !b]);
        o
    }

    /// At most one of `lits` is true.
    pub fn at_most_one(&mut self, lits: &[Lit]) {
        if lits.len() <= 6 {
            for i in 0..lits.len() {
                for j in i + 1..lits.len() {
                    self.add(&[!lits[i], !lits[j]]);
                }
            }
            return;
        }
        // ladder: p_i = "some of lits[..=i] is true"
        let mut prev = lits[0];
        for &l in &lits[1..] {
            self.add(&[!prev, !l]);
            let p = self.fresh();
            self.add(&[!prev, p]);
            self.add(&[!l, p]);
            prev = p;
        }
    }

    /// Require at least `t` of `lits` to be true (sequential counter).
    pub fn assert_at_least(&mut self, lits: &[Lit], t: usize) -> Cardinality {
        if t > lits.len() {
            self.add(&[]);
            return Cardinality::Infeasible;
        }
        let l = self.at_least(lits, t);
        self.add(&[l]);
        Cardinality::Added
    }

    /// Literal that, when true, forces at least `t` of `lits` to be true.
    /// Usable as an assumption; constant false when `t > lits.len()`.
    pub fn at_least(&mut self, lits: &[Lit], t: usize) -> Lit {
        let n = lits.len();
        if t == 0 {
            return self.constant(true);
        }
        if t > n {
            return self.constant(false);
        }
        if t == n {
            return self.and(lits);
        }
        if t <= n - t {
            card::at_least(self, lits, t)
        } else {
            let neg: Vec<Lit> = lits.iter().map(|&l| !l).collect();
            let c = Counter::new(self, &neg, n - t);
            c.at_most(n - t).expect("bound below input count")
        }
    }

    pub fn solve(&mut self, assumptions: &[Lit]) -> Result<bool> {
        if let Some(d) = &mut self.dump {
            let path = d.dir.join(format!("{}-{:04}.cnf", d.prefix, d.count));
            d.count += 1;
            let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            self.sat
                .write_dimacs(std::io::BufWriter::new(file), assumptions)
                .map_err(|e| Error::io(&path, e))?;
        }
        Ok(self.sat.solve_with(assumptions) == SolveResult::Sat)
    }

    /// Value of `l` in the last model.
    pub fn value(&self, l: Lit) -> bool {
        self.sat.model_value(l)
    }

    pub fn failed_assumptions(&self) -> Vec<Lit> {
        self.sat.failed_assumptions().to_vec()
    }

    /// Deletion-minimal subset of `assumptions` that is unsatisfiable
    /// together with the hard clauses.
    pub fn unsat_core(&mut self, assumptions: &[Lit]) -> Result<Vec<Lit>> {
        if self.solve(assumptions)? {
            return Err(Error::Solver(
                "unsat core requested for a satisfiable query".into(),
            ));
        }
        let mut core = self.order_like(assumptions, &self.failed_assumptions());
        let mut k = 0;
        while k < core.len() {
            let mut trial = core.clone();
            trial.remove(k);
            if self.solve(&trial)? {
                k += 1;
            } else {
                core = self.order_like(&trial, &self.failed_assumptions());
            }
        }
        Ok(core)
    }

    fn order_like(&self, reference: &[Lit], subset: &[Lit]) -> Vec<Lit> {
        let mut out: Vec<Lit> = reference
            .iter()
            .copied()
            .filter(|l| subset.contains(l))
            .collect();
        out.dedup();
        out
    }

    /// Every distinct assignment to `projection` consistent with the hard
    /// clauses and `assumptions`, each once. Blocking clauses are guarded by
    /// a fresh literal that is retired when the stream is dropped.
    pub fn models<'a>(&'a mut self, assumptions: &[Lit], projection: &[Lit]) -> Models<'a> {
        let guard = self.fresh();
        let mut assumptions = assumptions.to_vec();
        assumptions.push(guard);
        Models {
            session: self,
            assumptions,
            projection: projection.to_vec(),
            guard,
            done: false,
            error: None,
        }
    }
}

pub struct Models<'a> {
    session: &'a mut Session,
    assumptions: Vec<Lit>,
    projection: Vec<Lit>,
    guard: Lit,
    done: bool,
    error: Option<Error>,
}

impl Models<'_> {
    /// Solver error that ended the stream early, if any.
    pub fn take_error(&mut self) -> Option<Error> {
        self.error.take()
    }
}

impl Iterator for Models<'_> {
    type Item = Vec<bool>;

    fn next(&mut self) -> Option<Vec<bool>> {
        if self.done {
            return None;
        }
        match self.session.solve(&self.assumptions) {
            Ok(true) => {}
            Ok(false) => {
                self.done = true;
                return None;
            }
            Err(e) => {
                self.error = Some(e);
                self.done = true;
                return None;
            }
        }
        let values: Vec<bool> = self
            .projection
            .iter()
            .map(|&l| self.session.value(l))
            .collect();
        let mut block = vec![!self.guard];
        for (&l, &v) in self.projection.iter().zip(&values) {
            block.push(if v { !l } else { l });
        }
        self.session.add(&block);
        if self.projection.is_empty() {
            self.done = true;
        }
        Some(values)
    }
}

impl Drop for Models<'_> {
    fn drop(&mut self) {
        self.session.add(&[!self.guard]);
    }
}
