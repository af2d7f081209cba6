//! Repair of probabilistic adjacency matrices into legal circuit DAGs.
//!
//! A generator (or any other source) proposes an `N x N` matrix of edge
//! probabilities. Before a differentiable search can use it as structural
//! guidance the proposal must become a DAG that respects terminal rules:
//!
//! 1. [`apply_structural_rules`] keeps only edges with probability above 0.5
//!    whose source is not an output, whose target is not an input, and which
//!    are not self-loops.
//! 2. [`dag_search`] then deletes cycles greedily: find a cycle, drop its
//!    lowest-probability edge, repeat until acyclic.
//!
//! The surviving binary adjacency masks the original probabilities
//! ([`masked_probabilities`]), giving the prior the search initializes from.

mod matrix;
mod search;

pub use matrix::{parse_pmatrix_str, pmatrix_to_string, read_pmatrix, write_pmatrix, ProbabilityMatrix};
pub use search::{
    apply_structural_rules, dag_search, detect_cycle, masked_probabilities, RemovedEdge,
    RepairResult,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RepairError {
    #[error("probability {value} at ({row}, {col}) outside [0, 1]")]
    OutOfRange { row: usize, col: usize, value: f64 },

    #[error("expected {expected} entries for size {n}, got {got}")]
    BadLength { n: usize, expected: usize, got: usize },

    #[error("shape mismatch: matrix is {matrix} nodes, adjacency is {adjacency}")]
    ShapeMismatch { matrix: usize, adjacency: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
