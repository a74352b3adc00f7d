use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use abnsynth::comp::{GeneConfig, PathMode, SynthesisConfig, Targets, Threshold};
use abnsynth::direct::{DirectConfig, DEFAULT_NODE_LIMIT};
use abnsynth::model::GeneSet;
use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Compositional,
    Direct,
}

/// Overrides for one gene. Unset fields fall back to the global values.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneOverride {
    pub activators: Option<Vec<String>>,
    pub repressors: Option<Vec<String>>,
    pub max_activators: Option<usize>,
    pub max_repressors: Option<usize>,
    pub threshold: Option<Threshold>,
}

/// Declarative run configuration, read from TOML and patched by flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    /// `None` selects one shortest path per final state.
    pub k: Option<usize>,
    pub finals: Targets,
    pub max_activators: usize,
    pub max_repressors: usize,
    pub threshold: Threshold,
    pub max_path_len: Option<usize>,
    pub repair_limit: usize,
    pub repair_depth: usize,
    pub combination_limit: usize,
    pub workers: usize,
    pub seed: u64,
    /// Networks checked per family; larger families are sampled.
    pub verify_limit: usize,
    pub max_steps: Option<usize>,
    pub node_limit: usize,
    pub model_limit: Option<usize>,
    pub dump_cnf: Option<PathBuf>,
    pub genes: BTreeMap<String, GeneOverride>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let base = SynthesisConfig::uniform(0, 2, 1, Threshold::Auto);
        RunConfig {
            mode: Mode::Compositional,
            k: None,
            finals: Targets::Labelled,
            max_activators: 2,
            max_repressors: 1,
            threshold: Threshold::Auto,
            max_path_len: None,
            repair_limit: base.repair_limit,
            repair_depth: base.repair_depth,
            combination_limit: base.combination_limit,
            workers: 0,
            seed: 0,
            verify_limit: 10_000,
            max_steps: None,
            node_limit: DEFAULT_NODE_LIMIT,
            model_limit: Some(100_000),
            dump_cnf: None,
            genes: BTreeMap::new(),
        }
    }
}

/// Flags that override the file. `None` leaves the file value alone.
#[derive(Clone, Debug, Default, clap::Args)]
pub struct Overrides {
    /// Run configuration (TOML)
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Use the k shortest paths per final state instead of one
    #[arg(long)]
    pub k: Option<usize>,
    /// Required negative matches per gene, or `auto`
    #[arg(long)]
    pub threshold: Option<Threshold>,
    #[arg(long)]
    pub max_activators: Option<usize>,
    #[arg(long)]
    pub max_repressors: Option<usize>,
    #[arg(long)]
    pub max_path_len: Option<usize>,
    /// Step bound for direct mode
    #[arg(long)]
    pub max_steps: Option<usize>,
    /// Final states: `labelled` or `all` (every non-initial state)
    #[arg(long)]
    pub finals: Option<Targets>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads, 0 for all cores
    #[arg(long)]
    pub workers: Option<usize>,
    /// Write every solver query as DIMACS into this directory
    #[arg(long)]
    pub dump_cnf: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn resolve(o: &Overrides) -> Result<Self> {
        let mut c = match &o.config {
            Some(p) => Self::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(v) = o.mode {
            c.mode = v;
        }
        if let Some(v) = o.k {
            c.k = Some(v);
        }
        if let Some(v) = o.threshold {
            c.threshold = v;
            for g in c.genes.values_mut() {
                g.threshold = None;
            }
        }
        if let Some(v) = o.max_activators {
            c.max_activators = v;
        }
        if let Some(v) = o.max_repressors {
            c.max_repressors = v;
        }
        if o.max_path_len.is_some() {
            c.max_path_len = o.max_path_len;
        }
        if o.max_steps.is_some() {
            c.max_steps = o.max_steps;
        }
        if let Some(v) = o.finals {
            c.finals = v;
        }
        if let Some(v) = o.seed {
            c.seed = v;
        }
        if let Some(v) = o.workers {
            c.workers = v;
        }
        if o.dump_cnf.is_some() {
            c.dump_cnf = o.dump_cnf.clone();
        }
        Ok(c)
    }

    pub fn synthesis(&self, genes: &GeneSet) -> Result<SynthesisConfig> {
        for name in self.genes.keys() {
            genes.index_of(name)?;
        }
        let all: Vec<usize> = (0..genes.len()).collect();
        let pool = |names: &Option<Vec<String>>| -> Result<Vec<usize>> {
            match names {
                None => Ok(all.clone()),
                Some(ns) => Ok(ns.iter().map(|n| genes.index_of(n)).collect::<abnsynth::Result<_>>()?),
            }
        };
        let mut cfg = SynthesisConfig::uniform(genes.len(), self.max_activators, self.max_repressors, self.threshold);
        for (i, gc) in cfg.genes.iter_mut().enumerate() {
            let o = self.genes.get(genes.name(i)).cloned().unwrap_or_default();
            *gc = GeneConfig {
                activators: pool(&o.activators)?,
                repressors: pool(&o.repressors)?,
                max_activators: o.max_activators.unwrap_or(self.max_activators),
                max_repressors: o.max_repressors.unwrap_or(self.max_repressors),
                threshold: o.threshold.unwrap_or(self.threshold),
            };
        }
        cfg.path_mode = match self.k {
            None => PathMode::Shortest,
            Some(0) => bail!("k must be at least 1"),
            Some(k) => PathMode::KShortest(k),
        };
        cfg.max_path_len = self.max_path_len;
        cfg.repair_limit = self.repair_limit;
        cfg.repair_depth = self.repair_depth;
        cfg.combination_limit = self.combination_limit;
        cfg.workers = self.workers;
        cfg.dump_dir = self.dump_cnf.clone();
        cfg.validate(genes.len())?;
        Ok(cfg)
    }

    pub fn direct(&self) -> DirectConfig {
        DirectConfig {
            max_steps: self.max_steps,
            node_limit: self.node_limit,
            model_limit: self.model_limit,
        }
    }
}
