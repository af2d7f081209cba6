//! Named parameter storage shared between a model and its optimizer.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

/// One learnable matrix.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ParamEntry {
    pub name: String,
    pub value: Array2<f64>,
}

/// An ordered collection of named parameter matrices.
///
/// The position at which a matrix was added is its *slot*; tapes and
/// optimizers refer to parameters by slot so the set can be serialized and
/// restored without re-deriving any mapping.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ParamSet {
    entries: Vec<ParamEntry>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a matrix and returns its slot. Names must be unique.
    pub fn add(&mut self, name: impl Into<String>, value: Array2<f64>) -> usize {
        let name = name.into();
        assert!(
            self.index_of(&name).is_none(),
            "duplicate parameter name {name:?}"
        );
        self.entries.push(ParamEntry { name, value });
        self.entries.len() - 1
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, slot: usize) -> &Array2<f64> {
        &self.entries[slot].value
    }

    pub fn get_mut(&mut self, slot: usize) -> &mut Array2<f64> {
        &mut self.entries[slot].value
    }

    pub fn name(&self, slot: usize) -> &str {
        &self.entries[slot].name
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.name == name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &ParamEntry> {
        self.entries.iter()
    }

    /// Total number of scalar values across all entries.
    pub fn scalar_count(&self) -> usize {
        self.entries.iter().map(|e| e.value.len()).sum()
    }

    /// True if any entry contains a non-finite value.
    pub fn any_non_finite(&self) -> bool {
        self.entries
            .iter()
            .any(|e| e.value.iter().any(|v| !v.is_finite()))
    }
}
