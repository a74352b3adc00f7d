//! Synthesis of asynchronous Boolean network models from observed states.

pub mod analysis;
pub mod bootstrap;
pub mod comp;
pub mod direct;
pub mod error;
pub mod fixtures;
pub mod graph;
pub mod ingest;
pub mod model;
pub mod par;
pub mod sat;
pub mod solver;

pub use error::{Error, Result, Stage};
