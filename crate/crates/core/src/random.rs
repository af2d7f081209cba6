//! Seeded random circuit generation for tests, corpora and benchmarks.

use rand::Rng;

use crate::circuit::{Circuit, NodeKind};

/// Size and shape knobs for [`random_circuit`].
///
/// Generated circuits are always valid: ids are laid out as inputs first,
/// then gates, then outputs; gates draw fan-ins only from earlier non-output,
/// non-idle nodes.
#[derive(Debug, Clone)]
pub struct RandomCircuitSpec {
    pub num_pi: (usize, usize),
    pub num_gates: (usize, usize),
    pub num_po: (usize, usize),
    /// Probability that a gate ties both inputs to one driver (an inverter).
    pub tie_prob: f64,
    /// Probability that a gate is left fully disconnected.
    pub idle_prob: f64,
}

impl Default for RandomCircuitSpec {
    fn default() -> Self {
        RandomCircuitSpec {
            num_pi: (2, 4),
            num_gates: (2, 16),
            num_po: (1, 3),
            tie_prob: 0.15,
            idle_prob: 0.05,
        }
    }
}

impl RandomCircuitSpec {
    /// Uniform sizes with default edge behaviour.
    pub fn sized(num_pi: (usize, usize), num_gates: (usize, usize), num_po: (usize, usize)) -> Self {
        RandomCircuitSpec {
            num_pi,
            num_gates,
            num_po,
            ..Default::default()
        }
    }
}

fn sample_range<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (usize, usize)) -> usize {
    rng.gen_range(lo..=hi)
}

/// Draw a structurally valid random circuit.
pub fn random_circuit<R: Rng + ?Sized>(rng: &mut R, spec: &RandomCircuitSpec) -> Circuit {
    let num_pi = sample_range(rng, spec.num_pi).max(1);
    let num_gates = sample_range(rng, spec.num_gates);
    let num_po = sample_range(rng, spec.num_po).max(1);

    let mut kinds = Vec::with_capacity(num_pi + num_gates + num_po);
    kinds.extend(std::iter::repeat(NodeKind::Pi).take(num_pi));
    kinds.extend(std::iter::repeat(NodeKind::Nand).take(num_gates));
    kinds.extend(std::iter::repeat(NodeKind::Po).take(num_po));

    let mut edges: Vec<(usize, usize)> = Vec::new();
    // Ids of nodes a later node may tap: inputs and non-idle gates.
    let mut drivers: Vec<usize> = (0..num_pi).collect();
    for g in 0..num_gates {
        let id = num_pi + g;
        if rng.gen_bool(spec.idle_prob) {
            continue;
        }
        let a = drivers[rng.gen_range(0..drivers.len())];
        if rng.gen_bool(spec.tie_prob) {
            edges.push((a, id));
        } else {
            let b = drivers[rng.gen_range(0..drivers.len())];
            edges.push((a, id));
            if b != a {
                edges.push((b, id));
            }
        }
        drivers.push(id);
    }
    for p in 0..num_po {
        let id = num_pi + num_gates + p;
        let d = drivers[rng.gen_range(0..drivers.len())];
        edges.push((d, id));
    }
    Circuit::new(kinds, &edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::stream_rng;

    #[test]
    fn generated_circuits_are_valid() {
        let mut rng = stream_rng(11, "random-circuit-test");
        for _ in 0..500 {
            let c = random_circuit(&mut rng, &RandomCircuitSpec::default());
            assert!(c.is_valid(), "violations: {:?}", c.validate());
        }
    }

    #[test]
    fn generation_is_seed_deterministic() {
        let spec = RandomCircuitSpec::default();
        let a: Vec<Circuit> = {
            let mut rng = stream_rng(3, "det");
            (0..20).map(|_| random_circuit(&mut rng, &spec)).collect()
        };
        let b: Vec<Circuit> = {
            let mut rng = stream_rng(3, "det");
            (0..20).map(|_| random_circuit(&mut rng, &spec)).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn layout_is_inputs_gates_outputs() {
        let mut rng = stream_rng(5, "layout");
        let c = random_circuit(&mut rng, &RandomCircuitSpec::sized((3, 3), (5, 5), (2, 2)));
        assert_eq!(c.pi_ids(), &[0, 1, 2]);
        assert_eq!(c.po_ids(), &[8, 9]);
        assert_eq!(c.num_nands(), 5);
    }
}
