//! Dense tensor view of a circuit for the encoder and decoder.

use logicforge_core::{layerize, Circuit, CircuitError, NodeKind};
use ndarray::Array2;

/// Feature columns: kind one-hot (3), indegree/4, outdegree/4, depth fraction.
pub const NODE_FEATURES: usize = 6;

/// Index used for each node kind in one-hot features and kind embeddings.
pub fn kind_index(kind: NodeKind) -> usize {
    match kind {
        NodeKind::Pi => 0,
        NodeKind::Nand => 1,
        NodeKind::Po => 2,
    }
}

/// A circuit lowered to the matrices the model consumes.
#[derive(Clone, Debug)]
pub struct CircuitGraph {
    pub features: Array2<f64>,
    /// Dense adjacency, `adj[[i, j]] = 1` for an edge i→j. Also the
    /// reconstruction target.
    pub adj: Array2<f64>,
    pub adj_t: Array2<f64>,
    pub kind_indices: Vec<usize>,
    pub n: usize,
}

impl CircuitGraph {
    pub fn from_circuit(circuit: &Circuit) -> Result<CircuitGraph, CircuitError> {
        let layering = layerize(circuit)?;
        let layer_of = layering.layer_of();
        let depth_div = (layering.num_layers() - 1).max(1) as f64;
        let n = circuit.node_count();
        let mut features = Array2::zeros((n, NODE_FEATURES));
        let mut kind_indices = Vec::with_capacity(n);
        for node in 0..n {
            let k = kind_index(circuit.kind(node));
            kind_indices.push(k);
            features[[node, k]] = 1.0;
            features[[node, 3]] = circuit.adjacency().indegree(node) as f64 / 4.0;
            features[[node, 4]] = circuit.adjacency().outdegree(node) as f64 / 4.0;
            features[[node, 5]] = layer_of[node] as f64 / depth_div;
        }
        let mut adj = Array2::zeros((n, n));
        for (src, dst) in circuit.adjacency().edges() {
            adj[[src, dst]] = 1.0;
        }
        let adj_t = adj.t().to_owned();
        Ok(CircuitGraph { features, adj, adj_t, kind_indices, n })
    }
}
