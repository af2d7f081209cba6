//! Lowering and-inverter graphs to pure-NAND circuits.
//!
//! Each and gate becomes one NAND (which directly realizes the *negated*
//! and), and polarities are fixed up with tied-input inverter NANDs that are
//! cached so no literal is inverted twice. Node ids come out with inputs
//! first, gates in topological order, outputs last.

use crate::aiger::{Aig, Literal};
use crate::DataError;
use logicforge_core::{Circuit, NodeKind};
use std::collections::HashMap;

struct Builder {
    kinds: Vec<NodeKind>,
    edges: Vec<(usize, usize)>,
    /// Literal -> node id computing that literal's value.
    cache: HashMap<Literal, usize>,
}

impl Builder {
    fn nand(&mut self, fanins: &[usize]) -> usize {
        let id = self.kinds.len();
        self.kinds.push(NodeKind::Nand);
        for &src in fanins {
            // Equal fanins collapse in the boolean adjacency, leaving the
            // tied-input inverter with a single incoming edge.
            self.edges.push((src, id));
        }
        id
    }

    /// Node computing `lit`, creating a cached inverter when the polarity
    /// is not already available.
    fn resolve(&mut self, lit: Literal) -> usize {
        if let Some(&id) = self.cache.get(&lit) {
            return id;
        }
        let base = *self
            .cache
            .get(&lit.negate())
            .expect("gates are lowered in topological order");
        let id = self.nand(&[base]);
        self.cache.insert(lit, id);
        id
    }
}

/// Convert a combinational AIG into a functionally equivalent NAND circuit.
pub fn aig_to_nand(aig: &Aig) -> Result<Circuit, DataError> {
    let order = aig.topo_ands()?;
    let defined: std::collections::HashSet<usize> = aig
        .inputs
        .iter()
        .chain(aig.ands.iter().map(|g| &g.lhs))
        .map(|l| l.var())
        .collect();
    for lit in aig
        .ands
        .iter()
        .flat_map(|g| [g.rhs0, g.rhs1])
        .chain(aig.outputs.iter().copied())
    {
        if !defined.contains(&lit.var()) {
            return Err(DataError::Undefined { var: lit.var() });
        }
    }
    let mut b = Builder {
        kinds: vec![NodeKind::Pi; aig.num_inputs()],
        edges: Vec::new(),
        cache: HashMap::new(),
    };
    for (k, input) in aig.inputs.iter().enumerate() {
        b.cache.insert(*input, k);
    }
    for &i in &order {
        let gate = &aig.ands[i];
        let a = b.resolve(gate.rhs0);
        let c = b.resolve(gate.rhs1);
        // NAND(a, c) is exactly the negated and.
        let core = b.nand(&[a, c]);
        b.cache.insert(gate.lhs.negate(), core);
    }
    let drivers: Vec<usize> = aig.outputs.iter().map(|&o| b.resolve(o)).collect();
    for driver in drivers {
        let po = b.kinds.len();
        b.kinds.push(NodeKind::Po);
        b.edges.push((driver, po));
    }
    Ok(Circuit::new(b.kinds, &b.edges))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aiger::{parse_aag, random_aig, RandomAigSpec};
    use logicforge_core::seed::stream_rng;

    #[test]
    fn single_and_becomes_nand_plus_inverter() {
        let aig = parse_aag("aag 3 2 0 1 1\n2\n4\n6\n6 2 4\n").unwrap();
        let circuit = aig_to_nand(&aig).unwrap();
        // Two inputs, the NAND core, its inverter, one output.
        assert_eq!(circuit.node_count(), 5);
        assert_eq!(circuit.num_pi(), 2);
        assert_eq!(circuit.num_nands(), 2);
        assert_eq!(circuit.num_po(), 1);
        assert!(circuit.is_valid(), "violations: {:?}", circuit.validate());
        let table = circuit.truth_table().unwrap();
        for row in 0..4 {
            let a = row & 1 == 1;
            let b = row >> 1 & 1 == 1;
            assert_eq!(table.bit(0, row), a && b);
        }
    }

    #[test]
    fn negated_output_skips_the_inverter() {
        let aig = parse_aag("aag 3 2 0 1 1\n2\n4\n7\n6 2 4\n").unwrap();
        let circuit = aig_to_nand(&aig).unwrap();
        // The NAND core already computes the negated and.
        assert_eq!(circuit.num_nands(), 1);
        let table = circuit.truth_table().unwrap();
        for row in 0..4 {
            let a = row & 1 == 1;
            let b = row >> 1 & 1 == 1;
            assert_eq!(table.bit(0, row), !(a && b));
        }
    }

    #[test]
    fn inverters_are_shared_between_uses() {
        // Both gates consume ~a; only one inverter may be created.
        let aig = parse_aag("aag 4 2 0 2 2\n2\n4\n6\n8\n6 3 4\n8 3 5\n").unwrap();
        let circuit = aig_to_nand(&aig).unwrap();
        // Gates: inv(a), core1, inv(core1), inv(b), core2, inv(core2).
        assert_eq!(circuit.num_nands(), 6);
        let table = circuit.truth_table().unwrap();
        for row in 0..4 {
            let a = row & 1 == 1;
            let b = row >> 1 & 1 == 1;
            assert_eq!(table.bit(0, row), !a && b);
            assert_eq!(table.bit(1, row), !a && !b);
        }
    }

    #[test]
    fn output_fed_directly_by_an_input_is_a_wire() {
        let aig = parse_aag("aag 1 1 0 1 0\n2\n2\n").unwrap();
        let circuit = aig_to_nand(&aig).unwrap();
        assert_eq!(circuit.num_nands(), 0);
        assert!(circuit.is_valid());
        let table = circuit.truth_table().unwrap();
        assert!(!table.bit(0, 0));
        assert!(table.bit(0, 1));
    }

    #[test]
    fn layout_keeps_inputs_first_and_outputs_last() {
        let mut rng = stream_rng(1, "convert-layout");
        for _ in 0..20 {
            let aig = random_aig(&mut rng, &RandomAigSpec::default());
            let circuit = aig_to_nand(&aig).unwrap();
            let n = circuit.node_count();
            let (pi, po) = (circuit.num_pi(), circuit.num_po());
            for id in 0..n {
                let kind = circuit.kind(id);
                if id < pi {
                    assert_eq!(kind, NodeKind::Pi);
                } else if id >= n - po {
                    assert_eq!(kind, NodeKind::Po);
                } else {
                    assert_eq!(kind, NodeKind::Nand);
                }
            }
        }
    }

    #[test]
    fn random_aigs_convert_to_equivalent_circuits() {
        let mut rng = stream_rng(2, "convert-equivalence");
        for round in 0..50 {
            let aig = random_aig(&mut rng, &RandomAigSpec::default());
            let circuit = aig_to_nand(&aig).unwrap();
            assert!(circuit.is_valid(), "round {round}: {:?}", circuit.validate());
            let want = aig.truth_table().unwrap();
            let got = circuit.truth_table().unwrap();
            assert_eq!(want, got, "round {round} diverged");
        }
    }
}
