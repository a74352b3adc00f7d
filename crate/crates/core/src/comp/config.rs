use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Required number of negative matches for one gene.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ThresholdRepr", into = "ThresholdRepr")]
pub enum Threshold {
    /// The largest value any admissible function reaches.
    #[default]
    Auto,
    Fixed(usize),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ThresholdRepr {
    Number(usize),
    Text(String),
}

impl TryFrom<ThresholdRepr> for Threshold {
    type Error = String;
    fn try_from(r: ThresholdRepr) -> std::result::Result<Self, String> {
        match r {
            ThresholdRepr::Number(n) => Ok(Threshold::Fixed(n)),
            ThresholdRepr::Text(t) => t.parse(),
        }
    }
}

impl From<Threshold> for ThresholdRepr {
    fn from(t: Threshold) -> Self {
        match t {
            Threshold::Auto => ThresholdRepr::Text("auto".into()),
            Threshold::Fixed(n) => ThresholdRepr::Number(n),
        }
    }
}

impl FromStr for Threshold {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Threshold::Auto);
        }
        s.parse()
            .map(Threshold::Fixed)
            .map_err(|_| format!("threshold must be `auto` or a count, got `{s}`"))
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Threshold::Auto => f.write_str("auto"),
            Threshold::Fixed(n) => write!(f, "{n}"),
        }
    }
}

/// How initial-to-final paths are selected.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathMode {
    /// One breadth-first shortest path per final state, repaired on
    /// conflicts.
    Shortest,
    /// Every combination of the `k` shortest loopless paths per final
    /// state; results are the union over successful combinations.
    KShortest(usize),
}

/// Pools, bounds and threshold for one gene's update function.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneConfig {
    pub activators: Vec<usize>,
    pub repressors: Vec<usize>,
    pub max_activators: usize,
    pub max_repressors: usize,
    pub threshold: Threshold,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthesisConfig {
    pub genes: Vec<GeneConfig>,
    pub path_mode: PathMode,
    /// Longest admissible path, in transitions.
    pub max_path_len: Option<usize>,
    /// Path repairs allowed before giving up in shortest mode.
    pub repair_limit: usize,
    /// Alternative paths per final state considered during repair.
    pub repair_depth: usize,
    /// Path combinations examined before giving up in k-shortest mode.
    pub combination_limit: usize,
    /// Worker threads; 0 uses every core, 1 runs sequentially.
    pub workers: usize,
    /// Write every solver query as DIMACS into this directory.
    pub dump_dir: Option<PathBuf>,
}

impl SynthesisConfig {
    /// Every gene may read every gene, with the same bounds and threshold.
    pub fn uniform(n: usize, max_activators: usize, max_repressors: usize, threshold: Threshold) -> Self {
        let all: Vec<usize> = (0..n).collect();
        SynthesisConfig {
            genes: (0..n)
                .map(|_| GeneConfig {
                    activators: all.clone(),
                    repressors: all.clone(),
                    max_activators,
                    max_repressors,
                    threshold,
                })
                .collect(),
            path_mode: PathMode::Shortest,
            max_path_len: None,
            repair_limit: 1000,
            repair_depth: 64,
            combination_limit: 100_000,
            workers: 0,
            dump_dir: None,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.genes.len() != n {
            return Err(Error::Config(format!(
                "configuration covers {} genes, data has {n}",
                self.genes.len()
            )));
        }
        for (i, g) in self.genes.iter().enumerate() {
            if g.max_activators == 0 || g.activators.is_empty() {
                return Err(Error::Config(format!(
                    "gene {i}: needs at least one activator"
                )));
            }
            if let Some(&bad) = g.activators.iter().chain(&g.repressors).find(|&&p| p >= n) {
                return Err(Error::GeneOutOfRange { index: bad, width: n });
            }
        }
        if let PathMode::KShortest(0) = self.path_mode {
            return Err(Error::Config("k must be at least 1".into()));
        }
        Ok(())
    }

    pub fn thresholds(&self) -> Vec<Threshold> {
        self.genes.iter().map(|g| g.threshold).collect()
    }
}
