//! Consensus networks whose edge weights are decoded from transmitted
//! codewords: effective-resistance robustness bounds, attack models and
//! continuous/discrete-time simulation.

pub mod attack;
pub mod coding;
pub mod dynamics;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod numfmt;
pub mod robustness;
pub mod sampling;

pub use error::{Error, Result};
