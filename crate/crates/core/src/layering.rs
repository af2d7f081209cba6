//! Longest-path layering of circuit DAGs.
//!
//! Layer 0 holds the primary inputs, the final layer holds the primary
//! outputs, and every other node sits at its longest-path depth from the
//! inputs. Nodes with no fan-in that are not primary inputs (idle gates and
//! heads of dangling chains) are placed at depth 1 by convention. Every edge
//! therefore runs from a strictly earlier layer to a later one, which is the
//! property the differentiable search relies on when building selector
//! candidate sets.

use crate::circuit::{Adjacency, Circuit, NodeKind};
use crate::error::CircuitError;

/// Node ids grouped by layer, ascending within each layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layering {
    layers: Vec<Vec<usize>>,
    num_nodes: usize,
}

impl Layering {
    /// Synthesize a layering for a fresh architecture: `num_pi` inputs, then
    /// one layer per entry of `hidden` (gate counts), then `num_po` outputs.
    /// Node ids are assigned densely in that order.
    pub fn from_widths(num_pi: usize, hidden: &[usize], num_po: usize) -> Layering {
        let mut layers = Vec::with_capacity(hidden.len() + 2);
        let mut next = 0usize;
        let mut take = |count: usize| -> Vec<usize> {
            let ids = (next..next + count).collect();
            next += count;
            ids
        };
        layers.push(take(num_pi));
        for &width in hidden {
            layers.push(take(width));
        }
        layers.push(take(num_po));
        Layering {
            layers,
            num_nodes: next,
        }
    }

    pub fn layers(&self) -> &[Vec<usize>] {
        &self.layers
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// Layer sizes, e.g. `[2, 4, 4, 1]`.
    pub fn widths(&self) -> Vec<usize> {
        self.layers.iter().map(|l| l.len()).collect()
    }

    pub fn pi_ids(&self) -> &[usize] {
        &self.layers[0]
    }

    pub fn po_ids(&self) -> &[usize] {
        self.layers.last().map(|l| l.as_slice()).unwrap_or(&[])
    }

    /// The gate layers strictly between inputs and outputs.
    pub fn gate_layers(&self) -> &[Vec<usize>] {
        &self.layers[1..self.layers.len() - 1]
    }

    pub fn num_gates(&self) -> usize {
        self.gate_layers().iter().map(|l| l.len()).sum()
    }

    /// Node kinds implied by layer position (first layer inputs, last layer
    /// outputs, everything between a gate), indexed by node id.
    pub fn implied_kinds(&self) -> Vec<NodeKind> {
        let mut kinds = vec![NodeKind::Nand; self.num_nodes];
        for &pi in self.pi_ids() {
            kinds[pi] = NodeKind::Pi;
        }
        for &po in self.po_ids() {
            kinds[po] = NodeKind::Po;
        }
        kinds
    }

    /// The layer index of every node, indexed by node id.
    pub fn layer_of(&self) -> Vec<usize> {
        let mut out = vec![0; self.num_nodes];
        for (depth, layer) in self.layers.iter().enumerate() {
            for &node in layer {
                out[node] = depth;
            }
        }
        out
    }
}

/// Layer a valid circuit. Fails with the validation report otherwise.
pub fn layerize(circuit: &Circuit) -> Result<Layering, CircuitError> {
    let violations = circuit.validate();
    if !violations.is_empty() {
        return Err(CircuitError::Invalid(violations));
    }
    layerize_adjacency(circuit.adjacency(), circuit.kinds())
}

/// Layer an arbitrary acyclic adjacency over known node kinds.
///
/// This is the entry point for repaired probability-matrix graphs, whose
/// indegrees may not yet satisfy full circuit validity; only acyclicity is
/// required here.
pub fn layerize_adjacency(
    adj: &Adjacency,
    kinds: &[NodeKind],
) -> Result<Layering, CircuitError> {
    assert_eq!(adj.n(), kinds.len(), "kinds and adjacency disagree on node count");
    let order = adj.topo_order().ok_or_else(|| {
        CircuitError::ShapeMismatch("layering requires an acyclic graph".to_string())
    })?;
    let n = adj.n();
    let mut depth = vec![0usize; n];
    for &node in &order {
        if kinds[node] == NodeKind::Pi {
            depth[node] = 0;
            continue;
        }
        // Non-input nodes sit one past their deepest predecessor; with no
        // predecessors they land at depth 1 (the idle convention).
        depth[node] = adj
            .fanins(node)
            .filter(|&p| kinds[p] != NodeKind::Po)
            .map(|p| depth[p] + 1)
            .max()
            .unwrap_or(1);
    }
    let max_gate_depth = (0..n)
        .filter(|&v| kinds[v] != NodeKind::Po)
        .map(|v| depth[v])
        .max()
        .unwrap_or(0);
    let po_layer = max_gate_depth + 1;
    let mut layers = vec![Vec::new(); po_layer + 1];
    for node in 0..n {
        let d = if kinds[node] == NodeKind::Po {
            po_layer
        } else {
            depth[node]
        };
        layers[d].push(node);
    }
    // Longest-path depths are contiguous (every node at depth d > 1 has a
    // predecessor at d - 1), so no interior layer is empty.
    Ok(Layering {
        layers,
        num_nodes: n,
    })
}
