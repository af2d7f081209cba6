//! Dataset construction from and-inverter graphs.
//!
//! The pipeline reads ASCII AIGER files (or generates random ones), converts
//! them into pure-NAND circuits, carves out small windows with bounded input
//! cuts, labels each window with its exhaustive truth table, and writes
//! deduplicated, augmented training records as JSONL shards.

pub mod aiger;
pub mod convert;
pub mod corpus;
pub mod extract;

pub use aiger::{parse_aag, random_aig, write_aag, Aig, AndGate, Literal, RandomAigSpec};
pub use convert::aig_to_nand;
pub use corpus::{
    augment_idle, augment_shuffle, build_corpus, read_corpus, rewrite, CorpusConfig,
    CorpusSummary, DatasetRecord, RecordMeta,
};
pub use extract::{cone_to_circuit, expand_fanout, extract_fanin, FaninCone};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("latches are not supported ({count} present)")]
    Latches { count: usize },
    #[error("line {line}: constant literal {literal} is not supported")]
    ConstantLiteral { line: usize, literal: usize },
    #[error("variable {var} is used but never defined")]
    Undefined { var: usize },
    #[error("the and-gate definitions contain a cycle")]
    Cyclic,
    #[error("pivot {node} resolves to a primary input")]
    PivotIsInput { node: usize },
    #[error(transparent)]
    Circuit(#[from] logicforge_core::CircuitError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl DataError {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> DataError {
        DataError::Parse { line, msg: msg.into() }
    }
}
