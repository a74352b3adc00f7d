//! A small CDCL SAT solver with incremental assumptions.
//!
//! Two-watched-literal propagation, first-UIP learning with local clause
//! minimisation, VSIDS branching with phase saving, Luby restarts and
//! activity-based learnt clause reduction. Clauses may be added between
//! calls to [`Solver::solve_with`]; when a call fails under assumptions,
//! [`Solver::failed_assumptions`] returns the subset of assumptions that
//! took part in the final conflict.

use std::fmt;
use std::io::{self, Write};

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(u32);

impl Var {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn lit(self, positive: bool) -> Lit {
        Lit(self.0 << 1 | u32::from(!positive))
    }

    pub fn pos(self) -> Lit {
        self.lit(true)
    }

    pub fn neg(self) -> Lit {
        self.lit(false)
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0 + 1)
    }
}

/// A literal: variable index shifted left, low bit set when negated.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(u32);

impl Lit {
    pub fn var(self) -> Var {
        Var(self.0 >> 1)
    }

    pub fn is_negated(self) -> bool {
        self.0 & 1 == 1
    }

    fn code(self) -> usize {
        self.0 as usize
    }

    /// DIMACS integer form.
    pub fn to_dimacs(self) -> i64 {
        let v = i64::from(self.0 >> 1) + 1;
        if self.is_negated() {
            -v
        } else {
            v
        }
    }
}

impl std::ops::Not for Lit {
    type Output = Lit;
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl fmt::Debug for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Value {
    True,
    False,
    Undef,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SolveResult {
    Sat,
    Unsat,
}

struct Clause {
    lits: Vec<Lit>,
    learnt: bool,
    deleted: bool,
    activity: f64,
}

#[derive(Clone, Copy)]
struct Watcher {
    cref: u32,
    blocker: Lit,
}

/// Binary max-heap over variables keyed by activity.
#[derive(Default)]
struct VarOrder {
    heap: Vec<u32>,
    pos: Vec<Option<usize>>,
}

impl VarOrder {
    fn grow(&mut self) {
        self.pos.push(None);
    }

    fn contains(&self, v: u32) -> bool {
        self.pos[v as usize].is_some()
    }

    fn insert(&mut self, v: u32, act: &[f64]) {
        if self.contains(v) {
            return;
        }
        self.heap.push(v);
        let i = self.heap.len() - 1;
        self.pos[v as usize] = Some(i);
        self.sift_up(i, act);
    }

    fn bumped(&mut self, v: u32, act: &[f64]) {
        if let Some(i) = self.pos[v as usize] {
            self.sift_up(i, act);
        }
    }

    fn pop(&mut self, act: &[f64]) -> Option<u32> {
        if self.heap.is_empty() {
            return None;
        }
        let top = self.heap.swap_remove(0);
        self.pos[top as usize] = None;
        if !self.heap.is_empty() {
            self.pos[self.heap[0] as usize] = Some(0);
            self.sift_down(0, act);
        }
        Some(top)
    }

    fn sift_up(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        while i > 0 {
            let parent = (i - 1) / 2;
            let p = self.heap[parent];
            if act[p as usize] >= act[v as usize] {
                break;
            }
            self.heap[i] = p;
            self.pos[p as usize] = Some(i);
            i = parent;
        }
        self.heap[i] = v;
        self.pos[v as usize] = Some(i);
    }

    fn sift_down(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        let n = self.heap.len();
        loop {
            let l = 2 * i + 1;
            if l >= n {
                break;
            }
            let r = l + 1;
            let c = if r < n && act[self.heap[r] as usize] > act[self.heap[l] as usize] {
                r
            } else {
                l
            };
            if act[self.heap[c] as usize] <= act[v as usize] {
                break;
            }
            self.heap[i] = self.heap[c];
            self.pos[self.heap[i] as usize] = Some(i);
            i = c;
        }
        self.heap[i] = v;
        self.pos[v as usize] = Some(i);
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Stats {
    pub solves: u64,
    pub conflicts: u64,
    pub decisions: u64,
    pub propagations: u64,
    pub restarts: u64,
}

pub struct Solver {
    clauses: Vec<Clause>,
    learnts: Vec<u32>,
    watches: Vec<Vec<Watcher>>,
    assigns: Vec<Value>,
    level: Vec<u32>,
    reason: Vec<Option<u32>>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    cla_inc: f64,
    order: VarOrder,
    phase: Vec<bool>,
    seen: Vec<bool>,
    model: Vec<bool>,
    failed: Vec<Lit>,
    ok: bool,
    max_learnts: f64,
    /// Problem clauses as given, for DIMACS dumps.
    original: Vec<Vec<Lit>>,
    record_original: bool,
    stats: Stats,
}

impl Default for Solver {
    fn default() -> Self {
        Self::new()
    }
}

impl Solver {
    pub fn new() -> Self {
        Solver {
            clauses: Vec::new(),
            learnts: Vec::new(),
            watches: Vec::new(),
            assigns: Vec::new(),
            level: Vec::new(),
            reason: Vec::new(),
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            activity: Vec::new(),
            var_inc: 1.0,
            cla_inc: 1.0,
            order: VarOrder::default(),
            phase: Vec::new(),
            seen: Vec::new(),
            model: Vec::new(),
            failed: Vec::new(),
            ok: true,
            max_learnts: 2000.0,
            original: Vec::new(),
            record_original: false,
            stats: Stats::default(),
        }
    }

    /// Keep a copy of every problem clause so that [`Solver::write_dimacs`]
    /// can reproduce the instance. Off by default.
    pub fn record_clauses(&mut self, on: bool) {
        self.record_original = on;
    }

    pub fn new_var(&mut self) -> Var {
        let v = self.assigns.len() as u32;
        self.assigns.push(Value::Undef);
        self.level.push(0);
        self.reason.push(None);
        self.activity.push(0.0);
        self.phase.push(false);
        self.seen.push(false);
        self.watches.push(Vec::new());
        self.watches.push(Vec::new());
        self.order.grow();
        self.order.insert(v, &self.activity);
        Var(v)
    }

    pub fn num_vars(&self) -> usize {
        self.assigns.len()
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len() - self.learnts.len()
    }

    pub fn stats(&self) -> Stats {
        self.stats
    }

    /// False once the clause database is unsatisfiable without assumptions.
    pub fn is_ok(&self) -> bool {
        self.ok
    }

    fn value(&self, l: Lit) -> Value {
        match self.assigns[l.var().index()] {
            Value::Undef => Value::Undef,
            Value::True if l.is_negated() => Value::False,
            Value::False if l.is_negated() => Value::True,
            v => v,
        }
    }

    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    /// Add a problem clause. Returns false if the database became
    /// unsatisfiable.
    pub fn add_clause(&mut self, lits: &[Lit]) -> bool {
        if self.record_original {
            self.original.push(lits.to_vec());
        }
        if !self.ok {
            return false;
        }
        self.cancel_until(0);
        let mut c: Vec<Lit> = lits.to_vec();
        c.sort_unstable();
        c.dedup();
        let mut out = Vec::with_capacity(c.len());
        for (k, &l) in c.iter().enumerate() {
            if k + 1 < c.len() && c[k + 1] == !l {
                return true; // tautology
            }
            match self.value(l) {
                Value::True => return true,
                Value::False => {}
                Value::Undef => out.push(l),
            }
        }
        match out.len() {
            0 => {
                self.ok = false;
                false
            }
            1 => {
                self.enqueue(out[0], None);
                if self.propagate().is_some() {
                    self.ok = false;
                }
                self.ok
            }
            _ => {
                self.attach(out, false);
                true
            }
        }
    }

    fn attach(&mut self, lits: Vec<Lit>, learnt: bool) -> u32 {
        let cref = self.clauses.len() as u32;
        self.watches[lits[0].code()].push(Watcher {
            cref,
            blocker: lits[1],
        });
        self.watches[lits[1].code()].push(Watcher {
            cref,
            blocker: lits[0],
        });
        self.clauses.push(Clause {
            lits,
            learnt,
            deleted: false,
            activity: 0.0,
        });
        if learnt {
            self.learnts.push(cref);
        }
        cref
    }

    fn enqueue(&mut self, l: Lit, reason: Option<u32>) {
        let v = l.var().index();
        self.assigns[v] = if l.is_negated() {
            Value::False
        } else {
            Value::True
        };
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(l);
    }

    fn propagate(&mut self) -> Option<u32> {
        let mut conflict = None;
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.stats.propagations += 1;
            let false_lit = !p;
            let mut ws = std::mem::take(&mut self.watches[false_lit.code()]);
            let mut i = 0;
            let mut j = 0;
            while i < ws.len() {
                let w = ws[i];
                i += 1;
                if self.value(w.blocker) == Value::True {
                    ws[j] = w;
                    j += 1;
                    continue;
                }
                let cref = w.cref as usize;
                if self.clauses[cref].deleted {
                    continue;
                }
                {
                    let lits = &mut self.clauses[cref].lits;
                    if lits[0] == false_lit {
                        lits.swap(0, 1);
                    }
                }
                let first = self.clauses[cref].lits[0];
                if first != w.blocker && self.value(first) == Value::True {
                    ws[j] = Watcher {
                        cref: w.cref,
                        blocker: first,
                    };
                    j += 1;
                    continue;
                }
                let len = self.clauses[cref].lits.len();
                let mut moved = false;
                for k in 2..len {
                    let l = self.clauses[cref].lits[k];
                    if self.value(l) != Value::False {
                        self.clauses[cref].lits.swap(1, k);
                        self.watches[l.code()].push(Watcher {
                            cref: w.cref,
                            blocker: first,
                        });
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[j] = Watcher {
                    cref: w.cref,
                    blocker: first,
                };
                j += 1;
                if self.value(first) == Value::False {
                    conflict = Some(w.cref);
                    self.qhead = self.trail.len();
                    while i < ws.len() {
                        ws[j] = ws[i];
                        j += 1;
                        i += 1;
                    }
                } else {
                    self.enqueue(first, Some(w.cref));
                }
            }
            ws.truncate(j);
            let slot = &mut self.watches[false_lit.code()];
            // watchers added to this list while it was taken out
            ws.append(slot);
            *slot = ws;
            if conflict.is_some() {
                break;
            }
        }
        conflict
    }

    fn cancel_until(&mut self, lvl: u32) {
        if self.decision_level() <= lvl {
            return;
        }
        let start = self.trail_lim[lvl as usize];
        for k in (start..self.trail.len()).rev() {
            let l = self.trail[k];
            let v = l.var().index();
            self.assigns[v] = Value::Undef;
            self.reason[v] = None;
            self.phase[v] = !l.is_negated();
            self.order.insert(v as u32, &self.activity);
        }
        self.trail.truncate(start);
        self.trail_lim.truncate(lvl as usize);
        self.qhead = start;
    }

    fn bump_var(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in self.activity.iter_mut() {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.order.bumped(v as u32, &self.activity);
    }

    fn bump_clause(&mut self, cref: usize) {
        let c = &mut self.clauses[cref];
        c.activity += self.cla_inc;
        if c.activity > 1e20 {
            for &r in &self.learnts {
                self.clauses[r as usize].activity *= 1e-20;
            }
            self.cla_inc *= 1e-20;
        }
    }

    fn analyze(&mut self, mut confl: u32) -> (Vec<Lit>, u32) {
        let mut out = vec![Lit(0)];
        let mut path = 0usize;
        let mut p: Option<Lit> = None;
        let mut idx = self.trail.len();
        let cur = self.decision_level();
        loop {
            let cref = confl as usize;
            if self.clauses[cref].learnt {
                self.bump_clause(cref);
            }
            let start = usize::from(p.is_some());
            for k in start..self.clauses[cref].lits.len() {
                let q = self.clauses[cref].lits[k];
                let v = q.var().index();
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    self.bump_var(v);
                    if self.level[v] >= cur {
                        path += 1;
                    } else {
                        out.push(q);
                    }
                }
            }
            loop {
                idx -= 1;
                if self.seen[self.trail[idx].var().index()] {
                    break;
                }
            }
            let lit = self.trail[idx];
            p = Some(lit);
            self.seen[lit.var().index()] = false;
            path -= 1;
            if path == 0 {
                break;
            }
            confl = self.reason[lit.var().index()].expect("implied literal has a reason");
        }
        out[0] = !p.unwrap();

        // local minimisation: drop literals whose reason is subsumed
        let mut keep = vec![out[0]];
        for &q in &out[1..] {
            let v = q.var().index();
            let redundant = match self.reason[v] {
                None => false,
                Some(r) => self.clauses[r as usize].lits[1..].iter().all(|l| {
                    let u = l.var().index();
                    self.seen[u] || self.level[u] == 0
                }),
            };
            if !redundant {
                keep.push(q);
            }
        }
        for &q in &out[1..] {
            self.seen[q.var().index()] = false;
        }
        let mut out = keep;

        let bt = if out.len() == 1 {
            0
        } else {
            let mut max_i = 1;
            for k in 2..out.len() {
                if self.level[out[k].var().index()] > self.level[out[max_i].var().index()] {
                    max_i = k;
                }
            }
            out.swap(1, max_i);
            self.level[out[1].var().index()]
        };
        (out, bt)
    }

    /// Collect the assumptions responsible for falsifying assumption `a`.
    fn analyze_final(&mut self, a: Lit) {
        self.failed.clear();
        self.failed.push(a);
        if self.decision_level() == 0 {
            return;
        }
        self.seen[a.var().index()] = true;
        let start = self.trail_lim[0];
        for k in (start..self.trail.len()).rev() {
            let l = self.trail[k];
            let v = l.var().index();
            if !self.seen[v] {
                continue;
            }
            match self.reason[v] {
                None => self.failed.push(l),
                Some(r) => {
                    for m in 1..self.clauses[r as usize].lits.len() {
                        let u = self.clauses[r as usize].lits[m].var().index();
                        if self.level[u] > 0 {
                            self.seen[u] = true;
                        }
                    }
                }
            }
            self.seen[v] = false;
        }
        self.seen[a.var().index()] = false;
    }

    fn locked(&self, cref: u32) -> bool {
        let c = &self.clauses[cref as usize];
        let v = c.lits[0].var().index();
        self.reason[v] == Some(cref) && self.value(c.lits[0]) == Value::True
    }

    fn reduce_db(&mut self) {
        let mut ls: Vec<u32> = self.learnts.clone();
        ls.sort_by(|a, b| {
            let ca = &self.clauses[*a as usize];
            let cb = &self.clauses[*b as usize];
            ca.activity
                .partial_cmp(&cb.activity)
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let half = ls.len() / 2;
        let mut kept = Vec::with_capacity(ls.len());
        for (k, &cref) in ls.iter().enumerate() {
            let c = &self.clauses[cref as usize];
            if k < half && c.lits.len() > 2 && !self.locked(cref) {
                let c = &mut self.clauses[cref as usize];
                c.deleted = true;
                c.lits = Vec::new();
            } else {
                kept.push(cref);
            }
        }
        self.learnts = kept;
        // purge watchers of deleted clauses
        for ws in self.watches.iter_mut() {
            ws.retain(|w| !self.clauses[w.cref as usize].deleted);
        }
    }

    fn luby(mut x: u64) -> u64 {
        let mut size = 1u64;
        let mut seq = 0u32;
        while size < x + 1 {
            seq += 1;
            size = 2 * size + 1;
        }
        while size - 1 != x {
            size = (size - 1) >> 1;
            seq -= 1;
            x %= size;
        }
        1u64 << seq
    }

    pub fn solve(&mut self) -> SolveResult {
        self.solve_with(&[])
    }

    /// Solve under the given assumptions. On `Sat` the model is available
    /// through [`Solver::model_value`]; on `Unsat` the failed assumptions
    /// are available through [`Solver::failed_assumptions`].
    pub fn solve_with(&mut self, assumptions: &[Lit]) -> SolveResult {
        self.stats.solves += 1;
        self.failed.clear();
        if !self.ok {
            return SolveResult::Unsat;
        }
        self.cancel_until(0);
        if self.propagate().is_some() {
            self.ok = false;
            return SolveResult::Unsat;
        }
        self.max_learnts = self.max_learnts.max(self.num_clauses() as f64 / 3.0);
        let mut restart = 0u64;
        let result = loop {
            let budget = 100 * Self::luby(restart);
            match self.search(budget, assumptions) {
                Some(r) => break r,
                None => {
                    restart += 1;
                    self.stats.restarts += 1;
                    self.max_learnts *= 1.05;
                }
            }
        };
        if result == SolveResult::Sat {
            self.model = self
                .assigns
                .iter()
                .map(|v| *v == Value::True)
                .collect();
        }
        self.cancel_until(0);
        result
    }

    fn search(&mut self, budget: u64, assumptions: &[Lit]) -> Option<SolveResult> {
        let mut conflicts = 0u64;
        loop {
            if let Some(confl) = self.propagate() {
                self.stats.conflicts += 1;
                conflicts += 1;
                if self.decision_level() == 0 {
                    self.ok = false;
                    return Some(SolveResult::Unsat);
                }
                let (learnt, bt) = self.analyze(confl);
                self.cancel_until(bt);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], None);
                } else {
                    let first = learnt[0];
                    let cref = self.attach(learnt, true);
                    self.bump_clause(cref as usize);
                    self.enqueue(first, Some(cref));
                }
                self.var_inc /= 0.95;
                self.cla_inc /= 0.999;
                continue;
            }
            if conflicts >= budget {
                self.cancel_until(0);
                return None;
            }
            if self.learnts.len() as f64 >= self.max_learnts + self.trail.len() as f64 {
                self.reduce_db();
            }
            let mut next = None;
            while (self.decision_level() as usize) < assumptions.len() {
                let a = assumptions[self.decision_level() as usize];
                match self.value(a) {
                    Value::True => self.trail_lim.push(self.trail.len()),
                    Value::False => {
                        self.analyze_final(a);
                        return Some(SolveResult::Unsat);
                    }
                    Value::Undef => {
                        next = Some(a);
                        break;
                    }
                }
            }
            let next = match next {
                Some(a) => a,
                None => {
                    let mut pick = None;
                    while let Some(v) = self.order.pop(&self.activity) {
                        if self.assigns[v as usize] == Value::Undef {
                            pick = Some(Var(v).lit(self.phase[v as usize]));
                            break;
                        }
                    }
                    match pick {
                        Some(l) => {
                            self.stats.decisions += 1;
                            l
                        }
                        None => return Some(SolveResult::Sat),
                    }
                }
            };
            self.trail_lim.push(self.trail.len());
            self.enqueue(next, None);
        }
    }

    /// Value of a literal in the last model.
    pub fn model_value(&self, l: Lit) -> bool {
        self.model[l.var().index()] != l.is_negated()
    }

    /// Assumptions (as passed in) that participated in the last failure.
    pub fn failed_assumptions(&self) -> &[Lit] {
        &self.failed
    }

    /// Write the recorded problem clauses, plus optional assumption units,
    /// in DIMACS CNF.
    pub fn write_dimacs<W: Write>(&self, mut out: W, assumptions: &[Lit]) -> io::Result<()> {
        writeln!(
            out,
            "p cnf {} {}",
            self.num_vars(),
            self.original.len() + assumptions.len()
        )?;
        for c in &self.original {
            for l in c {
                write!(out, "{} ", l.to_dimacs())?;
            }
            writeln!(out, "0")?;
        }
        for a in assumptions {
            writeln!(out, "{} 0", a.to_dimacs())?;
        }
        Ok(())
    }
}
