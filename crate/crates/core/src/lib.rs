//! Convex-roof entanglement quantification of three-qubit mixed states
//! through optimal witness operators.
//!
//! The pipeline: choose a [`symmetry::SymBasis`], maximize the smoothed
//! dual objective with [`outer::maximize_witness`], then certify the result
//! with [`verify::certify`] and read off the optimal decomposition.

pub mod error;
pub mod measure;
pub mod qcore;
pub mod states;
pub mod symmetry;

pub mod inner;
pub mod outer;
pub mod verify;
pub mod oracle;
pub mod artifacts;
pub mod cli;

mod chart;
mod optim;

pub use error::{Error, Result};
