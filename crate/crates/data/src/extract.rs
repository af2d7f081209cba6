//! Carving bounded-input windows out of larger NAND circuits.
//!
//! Starting from a pivot gate, [`extract_fanin`] grows a cone upward,
//! repeatedly replacing one cut leaf by its predecessors as long as the cut
//! stays within the input budget. [`expand_fanout`] then sweeps forward and
//! absorbs every gate whose operands are already available in the window.

use crate::DataError;
use logicforge_core::{Circuit, NodeKind};
use std::collections::{HashSet, VecDeque};

/// A window into a host circuit: `inputs` are the cut nodes that become the
/// window's primary inputs, `internal` the gates it keeps, in the order they
/// were absorbed.
#[derive(Clone, Debug)]
pub struct FaninCone {
    pub inputs: Vec<usize>,
    pub internal: Vec<usize>,
}

/// Grow a cone rooted at `pivot` whose input cut never exceeds
/// `max_inputs`. A primary-output pivot stands for its driving gate.
pub fn extract_fanin(
    circuit: &Circuit,
    pivot: usize,
    max_inputs: usize,
) -> Result<FaninCone, DataError> {
    assert!(max_inputs >= 2, "a NAND needs room for two operands");
    let pivot = match circuit.kind(pivot) {
        NodeKind::Nand => pivot,
        NodeKind::Po => {
            let driver = circuit
                .adjacency()
                .fanins(pivot)
                .next()
                .expect("outputs of a valid circuit are driven");
            if circuit.kind(driver) == NodeKind::Pi {
                return Err(DataError::PivotIsInput { node: pivot });
            }
            driver
        }
        NodeKind::Pi => return Err(DataError::PivotIsInput { node: pivot }),
    };

    let mut cut: HashSet<usize> = HashSet::from([pivot]);
    let mut internal: Vec<usize> = Vec::new();
    let mut internal_set: HashSet<usize> = HashSet::new();
    let mut tried: HashSet<usize> = HashSet::new();
    let mut queue: VecDeque<usize> = VecDeque::from([pivot]);
    while let Some(x) = queue.pop_front() {
        if !tried.insert(x) || circuit.kind(x) == NodeKind::Pi {
            continue;
        }
        // Operands computed inside the window need no cut slot.
        let preds: Vec<usize> = circuit
            .adjacency()
            .fanins(x)
            .filter(|p| !internal_set.contains(p))
            .collect();
        let mut candidate = cut.clone();
        candidate.remove(&x);
        candidate.extend(preds.iter().copied());
        if candidate.len() > max_inputs {
            continue; // x stays a window input
        }
        cut = candidate;
        internal.push(x);
        internal_set.insert(x);
        queue.extend(preds);
    }
    let mut inputs: Vec<usize> = cut.into_iter().collect();
    inputs.sort_unstable();
    Ok(FaninCone { inputs, internal })
}

/// Absorb every downstream gate whose operands already live in the window.
pub fn expand_fanout(circuit: &Circuit, cone: FaninCone) -> FaninCone {
    let FaninCone { inputs, mut internal } = cone;
    let mut available: HashSet<usize> = inputs.iter().copied().collect();
    available.extend(internal.iter().copied());
    let order = circuit
        .adjacency()
        .topo_order()
        .expect("valid circuits are acyclic");
    for v in order {
        if available.contains(&v) || circuit.kind(v) != NodeKind::Nand {
            continue;
        }
        if circuit.adjacency().indegree(v) == 0 {
            continue; // never absorb idle gates
        }
        if circuit.adjacency().fanins(v).all(|p| available.contains(&p)) {
            internal.push(v);
            available.insert(v);
        }
    }
    FaninCone { inputs, internal }
}

/// Materialize a cone as a standalone circuit: cut nodes become inputs,
/// gates keep their wiring, and every gate with no consumer inside the
/// window gets an output — capped at `max_po` by dropping the gates the
/// cone absorbed last.
pub fn cone_to_circuit(
    circuit: &Circuit,
    cone: &FaninCone,
    max_po: usize,
) -> Result<(Circuit, Vec<usize>), DataError> {
    assert!(max_po >= 1, "a circuit needs at least one output");
    assert!(!cone.internal.is_empty(), "empty cone");
    let internal_set: HashSet<usize> = cone.internal.iter().copied().collect();

    let topo = circuit
        .adjacency()
        .topo_order()
        .expect("valid circuits are acyclic");
    let mut topo_pos = vec![0usize; circuit.node_count()];
    for (i, &v) in topo.iter().enumerate() {
        topo_pos[v] = i;
    }
    let mut gates = cone.internal.clone();
    gates.sort_by_key(|&v| topo_pos[v]);

    // Window node ids: inputs, gates, then outputs.
    let mut local = vec![usize::MAX; circuit.node_count()];
    let mut source_ids = Vec::with_capacity(cone.inputs.len() + gates.len());
    for (i, &v) in cone.inputs.iter().chain(gates.iter()).enumerate() {
        local[v] = i;
        source_ids.push(v);
    }

    let mut maximal: Vec<usize> = cone
        .internal
        .iter()
        .copied()
        .filter(|&v| circuit.adjacency().fanouts(v).all(|w| !internal_set.contains(&w)))
        .collect();
    maximal.truncate(max_po); // `internal` is in absorption order
    maximal.sort_by_key(|&v| local[v]);

    let mut kinds = Vec::new();
    kinds.extend(std::iter::repeat(NodeKind::Pi).take(cone.inputs.len()));
    kinds.extend(std::iter::repeat(NodeKind::Nand).take(gates.len()));
    kinds.extend(std::iter::repeat(NodeKind::Po).take(maximal.len()));
    let mut edges = Vec::new();
    for &v in &gates {
        for p in circuit.adjacency().fanins(v) {
            edges.push((local[p], local[v]));
        }
    }
    let base = cone.inputs.len() + gates.len();
    for (o, &m) in maximal.iter().enumerate() {
        edges.push((local[m], base + o));
    }
    Ok((Circuit::new(kinds, &edges), source_ids))
}
