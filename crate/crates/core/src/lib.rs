//! Core data model for NAND-only gate-level circuits.
//!
//! A [`Circuit`] is a DAG over three node kinds: primary inputs (`PI`),
//! primary outputs (`PO`) and two-input NAND gates. Everything downstream of
//! this crate (structure repair, differentiable search, tokenization, dataset
//! extraction) works against these types:
//!
//! - [`Circuit`] / [`Adjacency`]: dense adjacency over nodes `0..N`, with
//!   structural validation and boolean simulation.
//! - [`TruthTable`]: packed per-output bit columns over all `2^num_inputs`
//!   input rows, with input 0 as the least-significant row bit.
//! - [`Layering`]: longest-path-from-inputs layer assignment, the scaffold the
//!   differentiable search builds its selector sets from.
//! - [`io`]: plain-text circuit and truth-table file formats.

pub mod circuit;
pub mod error;
pub mod io;
pub mod layering;
pub mod random;
pub mod seed;
pub mod truth;

pub use circuit::{Adjacency, Circuit, NodeKind, Violation};
pub use error::CircuitError;
pub use layering::{layerize, layerize_adjacency, Layering};
pub use truth::TruthTable;

/// Hard cap on primary-input count for exhaustive truth-table enumeration.
pub const MAX_TRUTH_INPUTS: usize = 20;
