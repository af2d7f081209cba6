//! Layered selector network: structure, relaxation, and discretization.

use logicforge_autodiff::sample::gumbel_matrix;
use logicforge_autodiff::{ParamSet, Tape, VarId};
use logicforge_core::{layerize, Adjacency, Circuit, Layering, NodeKind, TruthTable, MAX_TRUTH_INPUTS};
use logicforge_repair::ProbabilityMatrix;
use ndarray::Array2;
use rand::Rng;

use crate::train::DasError;

/// Relaxed NAND on the unit square; agrees with boolean NAND at the corners.
pub fn nand_relaxed(x: f64, y: f64) -> f64 {
    1.0 - x * y
}

/// Which input of its node a selector feeds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SelectorRole {
    InputA,
    InputB,
    PoSource,
}

/// One categorical choice over earlier-layer nodes.
#[derive(Clone, Debug)]
pub struct Selector {
    pub node: usize,
    pub role: SelectorRole,
    /// Candidate node ids in the order the forward pass stacks their values.
    pub candidates: Vec<usize>,
    /// Parameter slot of the 1×|candidates| logit row.
    pub slot: usize,
}

/// How selector weights are formed during a forward pass.
#[derive(Clone, Copy)]
pub enum SelectionMode<'a> {
    /// Plain softmax of the logits.
    Soft,
    /// Softmax of `(logits + noise) / temperature` with per-selector noise.
    Gumbel {
        noise: &'a [Array2<f64>],
        temperature: f64,
    },
}

/// How the second gate input's prior relates to the first.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SecondSelector {
    /// Both inputs start from the same prior weights.
    #[default]
    SamePrior,
    /// The second input damps the first input's favorite candidate so the
    /// two selectors are nudged toward different sources.
    DampedArgmax,
}

/// Options for shaping selector logits from an edge-probability matrix.
#[derive(Clone, Debug)]
pub struct PriorConfig {
    pub epsilon: f64,
    pub second_selector: SecondSelector,
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self { epsilon: 1e-6, second_selector: SecondSelector::SamePrior }
    }
}

const DAMP_FACTOR: f64 = 0.25;

/// What `init_from_prior` saw, kept so later logit re-draws can reproduce the
/// same shaping and so gates can be ranked by how much prior mass they got.
#[derive(Clone, Debug)]
struct PriorSnapshot {
    /// Per-selector weight rows (post-shaping), indexed like `selectors()`.
    rows: Vec<Vec<f64>>,
    /// Sum of incoming prior weights per node; zero for primary inputs.
    node_mass: Vec<f64>,
    epsilon: f64,
}

/// Logits whose softmax reproduces the normalized prior weights.
///
/// Any non-negative weight vector is accepted: it is normalized (an all-zero
/// vector falls back to uniform), floored by `epsilon`, and mapped through a
/// centered log so that `softmax(result) = (w + epsilon) / sum(w + epsilon)`.
pub fn prior_logits(weights: &[f64], epsilon: f64) -> Vec<f64> {
    assert!(!weights.is_empty(), "prior_logits needs at least one weight");
    assert!(
        weights.iter().all(|&w| w.is_finite() && w >= 0.0),
        "prior weights must be non-negative"
    );
    let sum: f64 = weights.iter().sum();
    let n = weights.len() as f64;
    let normalized: Vec<f64> = if sum > 0.0 {
        weights.iter().map(|&w| w / sum).collect()
    } else {
        vec![1.0 / n; weights.len()]
    };
    let logs: Vec<f64> = normalized.iter().map(|&w| (w + epsilon).ln()).collect();
    let mean = logs.iter().sum::<f64>() / n;
    logs.iter().map(|&l| l - mean).collect()
}

/// Number of NAND gates that feed at least one primary output, directly or
/// transitively.
pub fn used_nand_count(circuit: &Circuit) -> usize {
    let mut seen = vec![false; circuit.node_count()];
    let mut stack: Vec<usize> = circuit.po_ids().to_vec();
    for &po in circuit.po_ids() {
        seen[po] = true;
    }
    let mut count = 0;
    while let Some(node) = stack.pop() {
        for src in circuit.adjacency().fanins(node) {
            if !seen[src] {
                seen[src] = true;
                if circuit.kind(src) == NodeKind::Nand {
                    count += 1;
                }
                stack.push(src);
            }
        }
    }
    count
}

/// A layered circuit search space with learnable input selectors.
#[derive(Clone, Debug)]
pub struct LayeredNet {
    layering: Layering,
    kinds: Vec<NodeKind>,
    selectors: Vec<Selector>,
    params: ParamSet,
    prior: Option<PriorSnapshot>,
}

impl LayeredNet {
    /// Builds a search space over a layering with uniform (all-zero) logits.
    pub fn new(layering: Layering) -> LayeredNet {
        let kinds = layering.implied_kinds();
        Self::build(layering, kinds)
    }

    /// Wraps an existing circuit as a net whose selectors put all their mass
    /// on the circuit's actual wires, so the relaxed forward pass reproduces
    /// the circuit's boolean outputs exactly.
    pub fn from_circuit(circuit: &Circuit) -> Result<LayeredNet, DasError> {
        let layering = layerize(circuit)?;
        let kinds = circuit.kinds().to_vec();
        let mut net = Self::build(layering, kinds);
        for i in 0..net.selectors.len() {
            let sel = &net.selectors[i];
            let fanins: Vec<usize> = circuit.adjacency().fanins(sel.node).collect();
            let chosen = match sel.role {
                SelectorRole::PoSource => Some(fanins[0]),
                SelectorRole::InputA => fanins.first().copied(),
                SelectorRole::InputB => fanins.last().copied(),
            };
            // Idle gates have no wires; their selectors stay uniform. They
            // have no fanout, so they cannot perturb the outputs.
            let Some(chosen) = chosen else { continue };
            let pos = sel
                .candidates
                .iter()
                .position(|&c| c == chosen)
                .expect("fanin is an earlier-layer node");
            let slot = sel.slot;
            let row = net.params.get_mut(slot);
            // exp(-1e9) underflows to exactly zero, so the softmax of this
            // row is exactly one-hot and mixtures collapse to plain wires.
            row.fill(-1e9);
            row[[0, pos]] = 0.0;
        }
        Ok(net)
    }

    fn build(layering: Layering, kinds: Vec<NodeKind>) -> LayeredNet {
        assert!(!layering.pi_ids().is_empty(), "net needs at least one input");
        assert!(!layering.po_ids().is_empty(), "net needs at least one output");
        assert!(
            layering.pi_ids().len() <= MAX_TRUTH_INPUTS,
            "too many inputs for exhaustive evaluation"
        );
        let mut params = ParamSet::new();
        let mut selectors = Vec::new();
        let mut prefix: Vec<usize> = Vec::new();
        for (l, layer) in layering.layers().iter().enumerate() {
            if l > 0 {
                for &node in layer {
                    match kinds[node] {
                        NodeKind::Pi => unreachable!("inputs live in layer 0"),
                        NodeKind::Nand => {
                            for (role, tag) in
                                [(SelectorRole::InputA, 'a'), (SelectorRole::InputB, 'b')]
                            {
                                let slot = params
                                    .add(format!("g{node}.{tag}"), Array2::zeros((1, prefix.len())));
                                selectors.push(Selector {
                                    node,
                                    role,
                                    candidates: prefix.clone(),
                                    slot,
                                });
                            }
                        }
                        NodeKind::Po => {
                            let slot =
                                params.add(format!("po{node}"), Array2::zeros((1, prefix.len())));
                            selectors.push(Selector {
                                node,
                                role: SelectorRole::PoSource,
                                candidates: prefix.clone(),
                                slot,
                            });
                        }
                    }
                }
            }
            prefix.extend(layer.iter().copied());
        }
        LayeredNet { layering, kinds, selectors, params }
    }

    pub fn layering(&self) -> &Layering {
        &self.layering
    }

    pub fn kinds(&self) -> &[NodeKind] {
        &self.kinds
    }

    pub fn selectors(&self) -> &[Selector] {
        &self.selectors
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    pub fn num_pi(&self) -> usize {
        self.layering.pi_ids().len()
    }

    pub fn num_po(&self) -> usize {
        self.layering.po_ids().len()
    }

    /// Total NAND slots available to the search.
    pub fn search_space_gate_count(&self) -> usize {
        self.kinds.iter().filter(|k| **k == NodeKind::Nand).count()
    }

    /// Fresh per-selector noise rows for [`SelectionMode::Gumbel`].
    pub fn sample_noise<R: Rng>(&self, rng: &mut R) -> Vec<Array2<f64>> {
        self.selectors
            .iter()
            .map(|s| gumbel_matrix(rng, 1, s.candidates.len()))
            .collect()
    }

    /// Shapes all selector logits from an edge-probability matrix: each
    /// selector's weights are the probabilities of its candidate edges.
    pub fn init_from_prior(
        &mut self,
        probs: &ProbabilityMatrix,
        cfg: &PriorConfig,
    ) -> Result<(), DasError> {
        if probs.n() != self.layering.num_nodes() {
            return Err(DasError::PriorSize {
                expected: self.layering.num_nodes(),
                got: probs.n(),
            });
        }
        for sel in &self.selectors {
            let mut weights: Vec<f64> =
                sel.candidates.iter().map(|&c| probs.get(c, sel.node)).collect();
            if sel.role == SelectorRole::InputB
                && cfg.second_selector == SecondSelector::DampedArgmax
            {
                if let Some(best) = argmax_index(&weights) {
                    weights[best] *= DAMP_FACTOR;
                }
            }
            let logits = prior_logits(&weights, cfg.epsilon);
            let row = self.params.get_mut(sel.slot);
            for (j, &l) in logits.iter().enumerate() {
                row[[0, j]] = l;
            }
        }
        Ok(())
    }

    /// Runs the relaxed forward pass over all `2^num_pi` input rows and
    /// returns one 1×R value per primary output, in output order.
    pub fn forward_on_tape(&self, tape: &mut Tape, mode: SelectionMode) -> Vec<VarId> {
        self.forward_on_tape_with(tape, &self.params, mode)
    }

    /// Same as [`forward_on_tape`](Self::forward_on_tape) but reading logits
    /// from an external parameter set (used by finite-difference checks).
    pub fn forward_on_tape_with(
        &self,
        tape: &mut Tape,
        params: &ParamSet,
        mode: SelectionMode,
    ) -> Vec<VarId> {
        let rows = 1usize << self.num_pi();
        let mut value: Vec<Option<VarId>> = vec![None; self.layering.num_nodes()];
        for (k, &pi) in self.layering.pi_ids().iter().enumerate() {
            let data = Array2::from_shape_fn((1, rows), |(_, r)| ((r >> k) & 1) as f64);
            value[pi] = Some(tape.constant(data));
        }
        let mut prefix: Option<VarId> = None;
        let mut sel_idx = 0;
        let mut outputs = Vec::new();
        for (l, layer) in self.layering.layers().iter().enumerate().skip(1) {
            let below: Vec<VarId> = self.layering.layers()[l - 1]
                .iter()
                .map(|&n| value[n].expect("earlier layer evaluated"))
                .collect();
            let stacked = tape.concat_rows(&below);
            prefix = Some(match prefix {
                None => stacked,
                Some(p) => tape.concat_rows(&[p, stacked]),
            });
            let cands = prefix.unwrap();
            for &node in layer {
                match self.kinds[node] {
                    NodeKind::Pi => unreachable!("inputs live in layer 0"),
                    NodeKind::Nand => {
                        let a = self.mix(tape, params, sel_idx, cands, mode);
                        let b = self.mix(tape, params, sel_idx + 1, cands, mode);
                        sel_idx += 2;
                        let prod = tape.mul(a, b);
                        let neg = tape.scale(prod, -1.0);
                        value[node] = Some(tape.add_scalar(neg, 1.0));
                    }
                    NodeKind::Po => {
                        let v = self.mix(tape, params, sel_idx, cands, mode);
                        sel_idx += 1;
                        value[node] = Some(v);
                        outputs.push(v);
                    }
                }
            }
        }
        debug_assert_eq!(sel_idx, self.selectors.len());
        outputs
    }

    fn mix(
        &self,
        tape: &mut Tape,
        params: &ParamSet,
        sel_idx: usize,
        cands: VarId,
        mode: SelectionMode,
    ) -> VarId {
        let sel = &self.selectors[sel_idx];
        debug_assert_eq!(tape.value(cands).nrows(), sel.candidates.len());
        let logits = tape.param(params, sel.slot);
        let weights = match mode {
            SelectionMode::Soft => tape.softmax_rows(logits),
            SelectionMode::Gumbel { noise, temperature } => {
                let n = tape.constant(noise[sel_idx].clone());
                let z = tape.add(logits, n);
                let z = tape.scale(z, 1.0 / temperature);
                tape.softmax_rows(z)
            }
        };
        tape.matmul(weights, cands)
    }

    /// Relaxed output probabilities under plain softmax weights, one row per
    /// primary output.
    pub fn soft_outputs(&self) -> Array2<f64> {
        let mut tape = Tape::new();
        let outs = self.forward_on_tape(&mut tape, SelectionMode::Soft);
        let rows = 1usize << self.num_pi();
        let mut m = Array2::zeros((outs.len(), rows));
        for (i, &o) in outs.iter().enumerate() {
            m.row_mut(i).assign(&tape.value(o).row(0));
        }
        m
    }

    /// Mean absolute distance between the relaxed outputs and the target
    /// bits, before any thresholding.
    pub fn bits_distance(&self, table: &TruthTable) -> Result<f64, DasError> {
        self.check_table(table)?;
        let outs = self.soft_outputs();
        let mut total = 0.0;
        for o in 0..table.num_outputs() {
            for r in 0..table.num_rows() {
                let y = f64::from(u8::from(table.bit(o, r)));
                total += (outs[[o, r]] - y).abs();
            }
        }
        Ok(total / (table.num_outputs() * table.num_rows()) as f64)
    }

    pub(crate) fn check_table(&self, table: &TruthTable) -> Result<(), DasError> {
        if table.num_inputs() != self.num_pi() || table.num_outputs() != self.num_po() {
            return Err(DasError::TableShape {
                expected_pi: self.num_pi(),
                expected_po: self.num_po(),
                got_pi: table.num_inputs(),
                got_po: table.num_outputs(),
            });
        }
        Ok(())
    }

    /// Snaps every selector to its highest-logit candidate (ties go to the
    /// lowest node id) and returns the resulting wired circuit. A gate whose
    /// two selectors agree becomes a single-input inverter.
    pub fn discretize(&self) -> Circuit {
        let mut adj = Adjacency::new(self.layering.num_nodes());
        for sel in &self.selectors {
            let row = self.params.get(sel.slot);
            let mut best_pos = 0;
            for j in 1..sel.candidates.len() {
                let better = row[[0, j]] > row[[0, best_pos]];
                let tie_lower_id = row[[0, j]] == row[[0, best_pos]]
                    && sel.candidates[j] < sel.candidates[best_pos];
                if better || tie_lower_id {
                    best_pos = j;
                }
            }
            adj.set(sel.candidates[best_pos], sel.node, true);
        }
        Circuit::from_parts(self.kinds.clone(), adj)
    }
}

fn argmax_index(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        if best.map_or(true, |b| v > values[b]) {
            best = Some(i);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use logicforge_core::seed::stream_rng;
    use rand::Rng;

    fn xor_circuit() -> Circuit {
        // Classic four-NAND exclusive-or: t = a⊼b, out = (a⊼t) ⊼ (b⊼t).
        let kinds = vec![
            NodeKind::Pi,
            NodeKind::Pi,
            NodeKind::Nand,
            NodeKind::Nand,
            NodeKind::Nand,
            NodeKind::Nand,
            NodeKind::Po,
        ];
        Circuit::new(
            kinds,
            &[(0, 2), (1, 2), (0, 3), (2, 3), (1, 4), (2, 4), (3, 5), (4, 5), (5, 6)],
        )
    }

    #[test]
    fn selector_layout_matches_layering() {
        let net = LayeredNet::new(Layering::from_widths(2, &[3, 2], 1));
        // Layer 1 gates choose among 2 inputs; layer 2 among 5 nodes; the
        // output among all 7 non-output nodes.
        assert_eq!(net.selectors().len(), 2 * 3 + 2 * 2 + 1);
        assert_eq!(net.search_space_gate_count(), 5);
        let first = &net.selectors()[0];
        assert_eq!(first.candidates, vec![0, 1]);
        let last = net.selectors().last().unwrap();
        assert_eq!(last.role, SelectorRole::PoSource);
        assert_eq!(last.candidates.len(), 7);
    }

    #[test]
    fn wrapped_circuit_reproduces_its_truth_table_exactly() {
        let circuit = xor_circuit();
        let net = LayeredNet::from_circuit(&circuit).unwrap();
        let table = circuit.truth_table().unwrap();
        let outs = net.soft_outputs();
        for r in 0..4 {
            let expected = f64::from(u8::from(table.bit(0, r)));
            assert_eq!(outs[[0, r]], expected, "row {r} must be exact, not close");
        }
        assert_eq!(net.bits_distance(&table).unwrap(), 0.0);
    }

    #[test]
    fn discretizing_a_wrapped_circuit_returns_the_same_wiring() {
        let circuit = xor_circuit();
        let net = LayeredNet::from_circuit(&circuit).unwrap();
        let back = net.discretize();
        assert_eq!(back.adjacency(), circuit.adjacency());
        assert_eq!(back.kinds(), circuit.kinds());
    }

    #[test]
    fn single_input_wire_net_is_exact_identity() {
        // One input feeding the output through a singleton selector.
        let net = LayeredNet::new(Layering::from_widths(1, &[], 1));
        let outs = net.soft_outputs();
        assert_eq!(outs[[0, 0]], 0.0);
        assert_eq!(outs[[0, 1]], 1.0);
        let identity = TruthTable::from_fn(1, 1, |r, _| r == 1).unwrap();
        assert_eq!(net.bits_distance(&identity).unwrap(), 0.0);
    }

    #[test]
    fn uniform_output_over_wire_and_inverter_is_exactly_half() {
        // One gate (an inverter of the input, via tied selectors) plus the
        // input itself; a 50/50 output mix of a and ¬a is exactly 0.5.
        let net = LayeredNet::new(Layering::from_widths(1, &[1], 1));
        let outs = net.soft_outputs();
        assert_eq!(outs[[0, 0]], 0.5);
        assert_eq!(outs[[0, 1]], 0.5);
        let zeros = TruthTable::from_fn(1, 1, |_, _| false).unwrap();
        assert_eq!(net.bits_distance(&zeros).unwrap(), 0.5);
    }

    #[test]
    fn prior_logits_softmax_recovers_normalized_weights() {
        let mut rng = stream_rng(42, "prior-identity");
        for _ in 0..200 {
            let n = rng.gen_range(1..16);
            let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..2.0)).collect();
            let eps = 1e-6;
            let logits = prior_logits(&w, eps);
            let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
            let z: f64 = exps.iter().sum();
            let sum_w: f64 = w.iter().sum();
            for (i, &e) in exps.iter().enumerate() {
                let expected = (w[i] / sum_w + eps) / (1.0 + n as f64 * eps);
                assert!(
                    (e / z - expected).abs() < 1e-9,
                    "weight {i}: {} vs {expected}",
                    e / z
                );
            }
        }
    }

    #[test]
    fn prior_logits_uniform_fallback_for_all_zero_weights() {
        let logits = prior_logits(&[0.0, 0.0, 0.0], 1e-6);
        assert!(logits.iter().all(|&l| l.abs() < 1e-12));
    }

    #[test]
    fn prior_init_reads_edge_probabilities() {
        let mut net = LayeredNet::new(Layering::from_widths(2, &[1], 1));
        // Node ids: 0,1 inputs; 2 gate; 3 output.
        let mut probs = ProbabilityMatrix::zeros(4);
        probs.set(0, 2, 0.9);
        probs.set(1, 2, 0.1);
        probs.set(2, 3, 0.8);
        probs.set(0, 3, 0.2);
        net.init_from_prior(&probs, &PriorConfig::default()).unwrap();
        // The gate's first selector should now favor input 0.
        let sel = &net.selectors()[0];
        let row = net.params().get(sel.slot);
        assert!(row[[0, 0]] > row[[0, 1]]);
        let circuit = net.discretize();
        assert!(circuit.adjacency().get(0, 2));
        assert!(circuit.adjacency().get(2, 3));
    }

    #[test]
    fn damped_argmax_pushes_second_selector_elsewhere() {
        let mut net = LayeredNet::new(Layering::from_widths(2, &[1], 1));
        let mut probs = ProbabilityMatrix::zeros(4);
        probs.set(0, 2, 0.6);
        probs.set(1, 2, 0.4);
        probs.set(0, 3, 1.0);
        let cfg = PriorConfig { second_selector: SecondSelector::DampedArgmax, ..Default::default() };
        net.init_from_prior(&probs, &cfg).unwrap();
        let a = net.params().get(net.selectors()[0].slot).clone();
        let b = net.params().get(net.selectors()[1].slot).clone();
        assert!(a[[0, 0]] > a[[0, 1]], "first selector keeps the strong edge");
        assert!(b[[0, 0]] < b[[0, 1]], "second selector prefers the alternative");
    }

    #[test]
    fn prior_size_mismatch_is_rejected() {
        let mut net = LayeredNet::new(Layering::from_widths(2, &[1], 1));
        let probs = ProbabilityMatrix::zeros(3);
        let err = net.init_from_prior(&probs, &PriorConfig::default()).unwrap_err();
        assert!(matches!(err, DasError::PriorSize { expected: 4, got: 3 }));
    }

    #[test]
    fn discretize_breaks_logit_ties_toward_lower_node_id() {
        let net = LayeredNet::new(Layering::from_widths(3, &[1], 1));
        // All logits zero: every selector ties across its candidates.
        let circuit = net.discretize();
        assert!(circuit.adjacency().get(0, 3), "gate picks node 0 on a tie");
        assert_eq!(circuit.adjacency().indegree(3), 1, "tied inputs merge into one wire");
        assert!(circuit.adjacency().get(0, 4), "output picks node 0 on a tie");
    }

    #[test]
    fn used_gate_count_ignores_dangling_gates() {
        let circuit = xor_circuit();
        assert_eq!(used_nand_count(&circuit), 4);
        // A net with spare capacity wires only what the output cone needs.
        let net = LayeredNet::new(Layering::from_widths(2, &[2], 1));
        let c = net.discretize();
        assert!(used_nand_count(&c) <= 1);
    }

    #[test]
    fn relaxed_nand_matches_boolean_corners() {
        assert_eq!(nand_relaxed(0.0, 0.0), 1.0);
        assert_eq!(nand_relaxed(0.0, 1.0), 1.0);
        assert_eq!(nand_relaxed(1.0, 0.0), 1.0);
        assert_eq!(nand_relaxed(1.0, 1.0), 0.0);
        assert_eq!(nand_relaxed(0.5, 0.5), 0.75);
    }
}
