//! Monolithic encoding: all gene templates, arc orientations, step
//! counters and threshold cardinalities in one constraint system.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::comp::{resolve_thresholds, Problem, SynthesisConfig};
use crate::error::{Error, Result, Stage};
use crate::graph::NodeId;
use crate::model::UpdateFunction;
use crate::sat::Lit;
use crate::solver::{FunctionTemplate, Session, TemplateSpec};

pub const DEFAULT_NODE_LIMIT: usize = 1024;

/// Graphs up to this size get `|N| - 1` as the default step bound.
pub const DEFAULT_STEPS_UP_TO: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DirectConfig {
    /// Longest admissible initial-to-final path.
    pub max_steps: Option<usize>,
    /// Larger graphs are refused.
    pub node_limit: usize,
    /// Stop after this many networks.
    pub model_limit: Option<usize>,
}

impl Default for DirectConfig {
    fn default() -> Self {
        DirectConfig {
            max_steps: None,
            node_limit: DEFAULT_NODE_LIMIT,
            model_limit: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DirectOutcome {
    /// One function per gene, in model order.
    pub networks: Vec<Vec<UpdateFunction>>,
    pub thresholds: Vec<usize>,
    pub max_steps: usize,
    /// The model limit was hit.
    pub truncated: bool,
    /// Why no network exists, when there is none.
    pub infeasible: Option<Stage>,
    pub variables: usize,
    pub clauses: usize,
    pub seconds: f64,
}

impl DirectOutcome {
    /// Per gene, the distinct functions occurring in some network.
    pub fn candidates(&self) -> Vec<Vec<UpdateFunction>> {
        let n = self.thresholds.len();
        let mut out: Vec<std::collections::BTreeSet<UpdateFunction>> = vec![Default::default(); n];
        for net in &self.networks {
            for (i, f) in net.iter().enumerate() {
                out[i].insert(f.clone());
            }
        }
        out.into_iter().map(|s| s.into_iter().collect()).collect()
    }
}

/// Step bound in force for `problem` under `cfg`.
pub fn step_bound(problem: &Problem<'_>, cfg: &DirectConfig) -> Result<usize> {
    let n = problem.graph.node_count();
    match cfg.max_steps {
        Some(m) => Ok(m),
        None if n <= DEFAULT_STEPS_UP_TO => Ok(n.saturating_sub(1)),
        None => Err(Error::Config(format!(
            "a step bound is required for graphs above {DEFAULT_STEPS_UP_TO} nodes ({n} here)"
        ))),
    }
}

/// Unsigned counter `bits` (least significant first) strictly below `other`.
fn less_than(s: &mut Session, bits: &[Lit], other: &[Lit]) -> Lit {
    let mut lt = s.constant(false);
    for (&a, &b) in bits.iter().zip(other) {
        let here = s.and(&[!a, b]);
        let eq = s.iff(a, b);
        let carry = s.and(&[eq, lt]);
        lt = s.or(&[here, carry]);
    }
    lt
}

fn width(m: usize) -> usize {
    (usize::BITS - m.leading_zeros()).max(1) as usize
}

/// Encoded instance, ready for enumeration.
pub struct DirectEncoding {
    session: Session,
    templates: Vec<FunctionTemplate>,
    /// Enables the final-reachability requirement.
    reach_on: Lit,
    thresholds: Vec<usize>,
    max_steps: usize,
}

impl DirectEncoding {
    pub fn new(problem: &Problem<'_>, cfg: &SynthesisConfig, direct: &DirectConfig) -> Result<Self> {
        let g = problem.graph;
        let nodes = g.node_count();
        if nodes > direct.node_limit {
            return Err(Error::DirectTooLarge {
                nodes,
                limit: direct.node_limit,
            });
        }
        let max_steps = step_bound(problem, direct)?;
        let thresholds = resolve_thresholds(g, cfg)?;
        let n = g.genes().len();

        let mut s = Session::new();
        if let Some(dir) = &cfg.dump_dir {
            s.dump_queries(dir, "direct");
        }
        let mut templates = Vec::with_capacity(n);
        for (i, gc) in cfg.genes.iter().enumerate() {
            let mut t = FunctionTemplate::encode(
                &mut s,
                i,
                TemplateSpec {
                    activators: &gc.activators,
                    repressors: &gc.repressors,
                    max_activators: gc.max_activators,
                    max_repressors: gc.max_repressors,
                },
            )?;
            let matches: Vec<Lit> = g
                .index()
                .without_edge(i)
                .iter()
                .map(|&v| {
                    let st = g.state(v);
                    t.application(&mut s, st, st.get(i))
                })
                .collect();
            s.assert_at_least(&matches, thresholds[i]);
            templates.push(t);
        }

        let reach_on = s.fresh();
        let w = width(max_steps);
        let mut initial = vec![false; nodes];
        for &v in &problem.initial {
            initial[v] = true;
        }
        let reach: Vec<Lit> = (0..nodes)
            .map(|v| if initial[v] { s.constant(true) } else { s.fresh() })
            .collect();
        let counter: Vec<Vec<Lit>> = (0..nodes)
            .map(|v| {
                (0..w)
                    .map(|_| if initial[v] { s.constant(false) } else { s.fresh() })
                    .collect()
            })
            .collect();
        let bound: Vec<Lit> = (0..w).map(|b| s.constant((max_steps + 1) >> b & 1 == 1)).collect();
        let fits_in_width = max_steps + 1 < 1 << w;

        let mut incoming: Vec<Vec<Lit>> = vec![Vec::new(); nodes];
        for a in g.all_arcs() {
            if initial[a.to] {
                continue;
            }
            let from = g.state(a.from);
            let to = g.state(a.to);
            let e = templates[a.gene].application(&mut s, from, to.get(a.gene));
            let earlier = less_than(&mut s, &counter[a.from], &counter[a.to]);
            let h = s.fresh();
            s.add(&[!h, e]);
            s.add(&[!h, reach[a.from]]);
            s.add(&[!h, earlier]);
            incoming[a.to].push(h);
        }
        for v in 0..nodes as NodeId {
            if initial[v] {
                continue;
            }
            let mut clause = vec![!reach[v]];
            clause.extend(&incoming[v]);
            s.add(&clause);
            if fits_in_width {
                let within = less_than(&mut s, &counter[v], &bound);
                s.add(&[!reach[v], within]);
            }
        }
        for &f in &problem.finals {
            s.add(&[!reach_on, reach[f]]);
        }
        log::info!(
            "direct encoding: {} variables, {} clauses, {w}-bit counters",
            s.num_vars(),
            s.num_clauses()
        );
        Ok(DirectEncoding {
            session: s,
            templates,
            reach_on,
            thresholds,
            max_steps,
        })
    }

    pub fn thresholds(&self) -> &[usize] {
        &self.thresholds
    }

    pub fn max_steps(&self) -> usize {
        self.max_steps
    }

    /// `None` if some network exists; otherwise the failing condition.
    pub fn diagnose(&mut self) -> Result<Option<Stage>> {
        if self.session.solve(&[self.reach_on])? {
            return Ok(None);
        }
        Ok(Some(if self.session.solve(&[])? {
            Stage::Reachability
        } else {
            Stage::Threshold
        }))
    }

    /// Whether some network in the encoding uses `f` for `gene`.
    pub fn admits(&mut self, gene: usize, f: &UpdateFunction) -> Result<bool> {
        let Some(mut pins) = self.templates.get(gene).and_then(|t| t.pin(f)) else {
            return Ok(false);
        };
        pins.push(self.reach_on);
        self.session.solve(&pins)
    }

    /// Enumerate networks, at most `limit`. The flag reports truncation.
    pub fn networks(&mut self, limit: Option<usize>) -> Result<(Vec<Vec<UpdateFunction>>, bool)> {
        let projection: Vec<Lit> = self.templates.iter().flat_map(|t| t.projection()).collect();
        let sizes: Vec<usize> = self.templates.iter().map(|t| t.projection().len()).collect();
        let mut models = self.session.models(&[self.reach_on], &projection);
        let mut raw = Vec::new();
        let mut truncated = false;
        for m in models.by_ref() {
            if limit.is_some_and(|l| raw.len() >= l) {
                truncated = true;
                break;
            }
            raw.push(m);
        }
        if let Some(e) = models.take_error() {
            return Err(e);
        }
        drop(models);
        let mut out: Vec<Vec<UpdateFunction>> = raw
            .iter()
            .map(|m| {
                let mut at = 0;
                self.templates
                    .iter()
                    .zip(&sizes)
                    .map(|(t, &k)| {
                        let f = t.decode_projected(&m[at..at + k]);
                        at += k;
                        f
                    })
                    .collect()
            })
            .collect();
        out.sort();
        Ok((out, truncated))
    }
}

/// Encode, diagnose and enumerate in one call.
pub fn synthesize_direct(
    problem: &Problem<'_>,
    cfg: &SynthesisConfig,
    direct: &DirectConfig,
) -> Result<DirectOutcome> {
    let t0 = Instant::now();
    let mut enc = DirectEncoding::new(problem, cfg, direct)?;
    let infeasible = enc.diagnose()?;
    let (networks, truncated) = match infeasible {
        Some(_) => (Vec::new(), false),
        None => enc.networks(direct.model_limit)?,
    };
    Ok(DirectOutcome {
        networks,
        thresholds: enc.thresholds.clone(),
        max_steps: enc.max_steps,
        truncated,
        infeasible,
        variables: enc.session.num_vars(),
        clauses: enc.session.num_clauses(),
        seconds: t0.elapsed().as_secs_f64(),
    })
}
