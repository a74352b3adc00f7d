use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{GeneSet, State, UpdateFunction};
use crate::error::{Error, Result};

/// Update rule of one gene. Synthesis only ever produces `Function`;
/// `Constant` exists for computational perturbations.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Rule {
    Function(UpdateFunction),
    Constant(bool),
}

impl Rule {
    pub fn evaluate(&self, s: State) -> bool {
        match self {
            Rule::Function(f) => f.evaluate(s),
            Rule::Constant(v) => *v,
        }
    }

    pub fn display(&self, genes: &GeneSet) -> String {
        match self {
            Rule::Function(f) => f.display(genes),
            Rule::Constant(v) => u8::from(*v).to_string(),
        }
    }
}

/// One rule per gene.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Network {
    rules: Vec<Rule>,
}

impl Network {
    pub fn new(rules: Vec<Rule>) -> Self {
        Network { rules }
    }

    pub fn from_functions(fs: Vec<UpdateFunction>) -> Self {
        Network {
            rules: fs.into_iter().map(Rule::Function).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn rule(&self, i: usize) -> &Rule {
        &self.rules[i]
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn with_rule(&self, i: usize, rule: Rule) -> Self {
        let mut rules = self.rules.clone();
        rules[i] = rule;
        Network { rules }
    }

    pub fn validate(&self, genes: &GeneSet) -> Result<()> {
        if self.rules.len() != genes.len() {
            return Err(Error::Config(format!(
                "network has {} rules for {} genes",
                self.rules.len(),
                genes.len()
            )));
        }
        for r in &self.rules {
            if let Rule::Function(f) = r {
                f.check_width(genes.len())?;
            }
        }
        Ok(())
    }

    pub fn is_enabled(&self, i: usize, s: State) -> bool {
        self.rules[i].evaluate(s) != s.get(i)
    }

    /// `(gene, successor)` for every enabled gene, in gene order. Empty iff
    /// `s` is stable.
    pub fn successors(&self, s: State) -> Vec<(usize, State)> {
        (0..self.rules.len())
            .filter(|&i| self.is_enabled(i, s))
            .map(|i| (i, s.flip(i)))
            .collect()
    }

    pub fn is_stable(&self, s: State) -> bool {
        (0..self.rules.len()).all(|i| !self.is_enabled(i, s))
    }

    /// Parse `Gene = rule` lines; `#` starts a comment. Rules are update
    /// functions in text form, or `0`/`1` for constants.
    pub fn parse(text: &str, genes: &GeneSet) -> Result<Self> {
        let mut rules: Vec<Option<Rule>> = vec![None; genes.len()];
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let loc = || format!("line {}", lineno + 1);
            let (name, body) = line.split_once('=').ok_or_else(|| Error::Parse {
                location: loc(),
                message: "expected `Gene = rule`".into(),
            })?;
            let i = genes.index_of(name.trim())?;
            let body = body.trim();
            let rule = match body {
                "0" => Rule::Constant(false),
                "1" => Rule::Constant(true),
                _ => Rule::Function(UpdateFunction::parse(body, genes).map_err(|e| {
                    Error::Parse {
                        location: loc(),
                        message: e.to_string(),
                    }
                })?),
            };
            if rules[i].replace(rule).is_some() {
                return Err(Error::Parse {
                    location: loc(),
                    message: format!("second rule for `{}`", genes.name(i)),
                });
            }
        }
        let rules = rules
            .into_iter()
            .enumerate()
            .map(|(i, r)| r.ok_or_else(|| Error::Config(format!("no rule for `{}`", genes.name(i)))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Network { rules })
    }

    pub fn display(&self, genes: &GeneSet) -> String {
        self.rules
            .iter()
            .enumerate()
            .map(|(i, r)| format!("{} = {}\n", genes.name(i), r.display(genes)))
            .collect()
    }
}

/// Labelled transition system over explicit states.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TransitionSystem {
    pub states: BTreeSet<State>,
    /// `(source, gene, target)`; source and target differ exactly at gene.
    pub arcs: BTreeSet<(State, usize, State)>,
}

impl TransitionSystem {
    pub fn has_successor(&self, s: State) -> bool {
        self.arcs
            .range((s, 0, State(0))..)
            .next()
            .is_some_and(|(a, _, _)| *a == s)
    }
}
