//! Incremental per-gene solver sessions shared by pruning and synthesis.

use std::collections::{HashMap, VecDeque};
use std::path::Path;

use super::GeneConfig;
use crate::error::Result;
use crate::graph::{Arc, StateGraph};
use crate::model::{State, UpdateFunction};
use crate::sat::Lit;
use crate::solver::{FunctionTemplate, Session, Sorter, TemplateSpec, WeightedAtLeast};

const WITNESS_DEPTH: usize = 8;

/// Up to this many distinct match literals the threshold is encoded as a
/// weighted decision diagram rather than a sorting network.
const WEIGHTED_UP_TO: usize = 64;

enum Cardinality {
    Sorted(Sorter),
    Weighted(WeightedAtLeast),
}

/// Outcome of one gene under a fixed set of path arcs.
#[derive(Clone, Debug)]
pub(crate) enum GeneResult {
    Sat {
        threshold: usize,
        functions: Vec<UpdateFunction>,
    },
    /// Core of the arcs that admit no common function; empty when the gene
    /// is infeasible on its own.
    Unsat { core: Vec<Arc> },
}

pub(crate) struct GeneSession {
    gene: usize,
    session: Session,
    template: FunctionTemplate,
    /// Negative-match literal per state of `N_i`.
    matches: Vec<Lit>,
    cardinality: Option<Cardinality>,
    arcs: HashMap<Arc, Lit>,
    witnesses: VecDeque<UpdateFunction>,
}

impl GeneSession {
    pub fn new(g: &StateGraph, gene: usize, cfg: &GeneConfig, dump: Option<&Path>) -> Result<Self> {
        let mut session = Session::new();
        if let Some(dir) = dump {
            session.dump_queries(dir, &format!("gene{gene}"));
        }
        let mut template = FunctionTemplate::encode(
            &mut session,
            gene,
            TemplateSpec {
                activators: &cfg.activators,
                repressors: &cfg.repressors,
                max_activators: cfg.max_activators,
                max_repressors: cfg.max_repressors,
            },
        )?;
        let matches = g
            .index()
            .without_edge(gene)
            .iter()
            .map(|&v| {
                let s = g.state(v);
                template.application(&mut session, s, s.get(gene))
            })
            .collect();
        Ok(GeneSession {
            gene,
            session,
            template,
            matches,
            cardinality: None,
            arcs: HashMap::new(),
            witnesses: VecDeque::new(),
        })
    }

    pub fn sites(&self) -> usize {
        self.matches.len()
    }

    pub fn arc_lit(&mut self, g: &StateGraph, arc: Arc) -> Lit {
        if let Some(&l) = self.arcs.get(&arc) {
            return l;
        }
        let from = g.state(arc.from);
        let to = g.state(arc.to);
        let l = self.template.application(&mut self.session, from, to.get(self.gene));
        self.arcs.insert(arc, l);
        l
    }

    /// Assumption literal requiring at least `t` negative matches.
    pub fn threshold_lit(&mut self, t: usize) -> Lit {
        if t == 0 || t > self.matches.len() {
            return self.session.constant(t == 0);
        }
        let s = &mut self.session;
        let c = self.cardinality.get_or_insert_with(|| {
            let mut weights: HashMap<Lit, usize> = HashMap::new();
            for &l in &self.matches {
                *weights.entry(l).or_default() += 1;
            }
            if weights.len() <= WEIGHTED_UP_TO {
                Cardinality::Weighted(WeightedAtLeast::new(weights.into_iter().collect()))
            } else {
                Cardinality::Sorted(Sorter::new(s, &self.matches))
            }
        });
        match c {
            Cardinality::Sorted(sorter) => sorter.at_least(s, t),
            Cardinality::Weighted(pb) => pb.at_least(s, t),
        }
    }

    fn matched_in_model(&self) -> usize {
        self.matches.iter().filter(|&&l| self.session.value(l)).count()
    }

    /// Largest reachable number of negative matches under `assumptions`,
    /// or `None` if the assumptions alone are unsatisfiable.
    pub fn max_matches(&mut self, assumptions: &[Lit]) -> Result<Option<usize>> {
        if !self.session.solve(assumptions)? {
            return Ok(None);
        }
        let n = self.matches.len();
        let mut lo = self.matched_in_model();
        let mut hi = n;
        let mut slack = 0;
        // probe downwards from a perfect score, doubling the slack
        while lo < hi {
            let t = n.saturating_sub(slack).max(lo + 1);
            let mut a = assumptions.to_vec();
            a.push(self.threshold_lit(t));
            if self.session.solve(&a)? {
                lo = self.matched_in_model();
                break;
            }
            hi = t - 1;
            slack = 2 * slack + 1;
        }
        while lo < hi {
            let t = lo + (hi - lo).div_ceil(2);
            let mut a = assumptions.to_vec();
            a.push(self.threshold_lit(t));
            if self.session.solve(&a)? {
                lo = self.matched_in_model();
            } else {
                hi = t - 1;
            }
        }
        Ok(Some(lo))
    }

    /// Whether some function realises `arc` while keeping `t` negative
    /// matches. Cached witnesses are replayed before the solver is asked.
    pub fn arc_feasible(&mut self, g: &StateGraph, arc: Arc, t: usize) -> Result<bool> {
        let from: State = g.state(arc.from);
        let expected = g.state(arc.to).get(self.gene);
        if let Some(k) = self.witnesses.iter().position(|w| w.evaluate(from) == expected) {
            let w = self.witnesses.remove(k).expect("index in range");
            self.witnesses.push_front(w);
            return Ok(true);
        }
        let a = [self.threshold_lit(t), self.arc_lit(g, arc)];
        if !self.session.solve(&a)? {
            return Ok(false);
        }
        let w = self.template.decode(&self.session);
        self.witnesses.push_front(w);
        self.witnesses.truncate(WITNESS_DEPTH);
        Ok(true)
    }

    /// All functions compatible with `arcs` and keeping `t` negative matches.
    pub fn functions(&mut self, assumptions: &[Lit], t: usize) -> Result<Vec<UpdateFunction>> {
        let mut a = assumptions.to_vec();
        a.push(self.threshold_lit(t));
        let projection = self.template.projection();
        let mut models = self.session.models(&a, &projection);
        let raw: Vec<Vec<bool>> = models.by_ref().collect();
        if let Some(e) = models.take_error() {
            return Err(e);
        }
        drop(models);
        let mut fs: Vec<UpdateFunction> = raw.iter().map(|m| self.template.decode_projected(m)).collect();
        fs.sort();
        Ok(fs)
    }

    /// Per-gene synthesis for the path arcs `arcs`; `fixed` is the required
    /// threshold, or `None` to maximise it.
    pub fn synthesize(&mut self, g: &StateGraph, arcs: &[Arc], fixed: Option<usize>) -> Result<GeneResult> {
        let lits: Vec<Lit> = arcs.iter().map(|&a| self.arc_lit(g, a)).collect();
        let t = match fixed {
            Some(t) => {
                let mut a = lits.clone();
                a.push(self.threshold_lit(t));
                if self.session.solve(&a)? {
                    Some(t)
                } else {
                    None
                }
            }
            None => self.max_matches(&lits)?,
        };
        match t {
            Some(t) => Ok(GeneResult::Sat {
                threshold: t,
                functions: self.functions(&lits, t)?,
            }),
            None => {
                let mut a = lits.clone();
                if let Some(t) = fixed {
                    a.push(self.threshold_lit(t));
                }
                let core = self.session.unsat_core(&a)?;
                let by_lit: HashMap<Lit, Arc> = arcs.iter().copied().zip(lits).map(|(a, l)| (l, a)).collect();
                let mut core: Vec<Arc> = core.iter().filter_map(|l| by_lit.get(l).copied()).collect();
                core.sort();
                core.dedup();
                Ok(GeneResult::Unsat { core })
            }
        }
    }
}
