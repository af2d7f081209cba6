//! End-to-end search smoke tests on small benchmark functions.

use logicforge_core::{Circuit, Layering, NodeKind, TruthTable};
use logicforge_das::{train, LayeredNet, PriorConfig, TrainConfig};
use logicforge_repair::ProbabilityMatrix;

fn xor_table() -> TruthTable {
    TruthTable::from_fn(2, 1, |r, _| (r & 1) != ((r >> 1) & 1)).unwrap()
}

#[test]
fn xor_is_recovered_from_uniform_init() {
    let mut net = LayeredNet::new(Layering::from_widths(2, &[4, 4, 4], 1));
    let cfg = TrainConfig { max_steps: 20_000, lr: 0.05, seed: 2, ..Default::default() };
    let out = train(&mut net, &xor_table(), &cfg).expect("training ran");
    assert_eq!(
        out.report.accuracy, 1.0,
        "XOR not recovered: {:?} (reinits at {:?})",
        out.report, out.reinit_events
    );
    assert!(out.report.used_nand_count >= 4, "XOR needs at least four NANDs");
    assert!(out.circuit.is_valid());
    assert_eq!(out.circuit.truth_table().unwrap(), xor_table());
}

#[test]
fn circuit_shaped_prior_converges_no_slower_than_uniform() {
    // Wrap a known-good XOR circuit, turn its wiring into edge
    // probabilities, and compare step counts on its own layering.
    let kinds = vec![
        NodeKind::Pi,
        NodeKind::Pi,
        NodeKind::Nand,
        NodeKind::Nand,
        NodeKind::Nand,
        NodeKind::Nand,
        NodeKind::Po,
    ];
    let xor = Circuit::new(
        kinds,
        &[(0, 2), (1, 2), (0, 3), (2, 3), (1, 4), (2, 4), (3, 5), (4, 5), (5, 6)],
    );
    let layering = logicforge_core::layerize(&xor).unwrap();
    let n = xor.node_count();
    let mut probs = ProbabilityMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                probs.set(i, j, if xor.adjacency().get(i, j) { 0.9 } else { 0.1 });
            }
        }
    }
    let cfg = TrainConfig { max_steps: 20_000, lr: 0.05, seed: 5, ..Default::default() };

    let mut prior_net = LayeredNet::new(layering.clone());
    prior_net.init_from_prior(&probs, &PriorConfig::default()).unwrap();
    let prior_out = train(&mut prior_net, &xor_table(), &cfg).expect("prior run");

    let mut uniform_net = LayeredNet::new(layering);
    let uniform_out = train(&mut uniform_net, &xor_table(), &cfg).expect("uniform run");

    assert_eq!(prior_out.report.accuracy, 1.0, "{:?}", prior_out.report);
    assert!(
        prior_out.report.steps_used <= uniform_out.report.steps_used,
        "prior {} steps vs uniform {}",
        prior_out.report.steps_used,
        uniform_out.report.steps_used
    );
    assert!(
        prior_out.report.bitsd_initial <= uniform_out.report.bitsd_initial,
        "prior should start closer to the target: {} vs {}",
        prior_out.report.bitsd_initial,
        uniform_out.report.bitsd_initial
    );
}
