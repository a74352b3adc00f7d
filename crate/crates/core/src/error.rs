use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("gene index {index} out of range for {width} genes")]
    GeneOutOfRange { index: usize, width: usize },

    #[error("unknown gene `{0}`")]
    UnknownGene(String),

    #[error("duplicate gene `{0}`")]
    DuplicateGene(String),

    #[error("at most {max} genes are supported, got {got}")]
    TooManyGenes { got: usize, max: usize },

    #[error("invalid formula: {0}")]
    Formula(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("unknown time label `{0}`")]
    UnknownLabel(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("no models at the given bounds ({stage}): {detail}")]
    NoModelsAtBounds { stage: Stage, detail: String },

    #[error("repair gave up after {iterations} iterations; results are incomplete at these bounds")]
    RepairLimit { iterations: usize },

    #[error("state space exceeds the cap of {cap} states")]
    StateCapExceeded { cap: usize },

    #[error("direct encoding refused: {nodes} nodes exceeds the limit of {limit}")]
    DirectTooLarge { nodes: usize, limit: usize },

    #[error("solver error: {0}")]
    Solver(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Pipeline stage that produced a failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Pruning,
    PathSelection,
    GeneSynthesis,
    Threshold,
    Reachability,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Stage::Pruning => "pruning",
            Stage::PathSelection => "path selection",
            Stage::GeneSynthesis => "gene synthesis",
            Stage::Threshold => "threshold",
            Stage::Reachability => "reachability",
        };
        f.write_str(s)
    }
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
