//! End-to-end smoke test: a small tokenizer memorizes a handful of circuits.

use logicforge_core::random::{random_circuit, RandomCircuitSpec};
use logicforge_core::seed::stream_rng;
use logicforge_vq::{edge_auc, CircuitGraph, VqConfig, VqTrainConfig, VqTrainer};

fn small_corpus(seed: u64, count: usize) -> Vec<CircuitGraph> {
    let mut rng = stream_rng(seed, "vq-overfit");
    let spec = RandomCircuitSpec::sized((2, 3), (3, 7), (1, 2));
    (0..count)
        .map(|_| CircuitGraph::from_circuit(&random_circuit(&mut rng, &spec)).unwrap())
        .collect()
}

#[test]
fn tiny_model_overfits_eight_circuits() {
    let cfg = VqConfig {
        embed_dim: 16,
        code_dim: 4,
        codebook_size: 32,
        rounds: 2,
        ffn_dim: 32,
        max_nodes: 24,
        ..Default::default()
    };
    let tcfg = VqTrainConfig {
        lr: 1e-2,
        minibatch: 8,
        max_epochs: 400,
        max_steps: 400,
        target_rec: 0.05,
        seed: 42,
        ..Default::default()
    };
    let graphs = small_corpus(1, 8);
    let mut trainer = VqTrainer::new(cfg, tcfg);
    let (initial_rec, _) = trainer.evaluate(&graphs);
    let history = trainer.train(&graphs);
    assert!(!history.is_empty());
    let last = history.last().unwrap();
    assert!(
        last.eval_rec < initial_rec,
        "training must improve: {initial_rec} -> {}",
        last.eval_rec
    );
    assert!(
        last.eval_rec < 0.20,
        "memorization should push reconstruction loss down, got {}",
        last.eval_rec
    );

    let mut auc_sum = 0.0;
    for graph in &graphs {
        let (probs, codes) = trainer.model.reconstruct(graph).unwrap();
        assert_eq!(codes.len(), graph.n);
        auc_sum += edge_auc(&probs, &graph.adj);
    }
    let mean_auc = auc_sum / graphs.len() as f64;
    assert!(mean_auc > 0.90, "edge ranking should be sharp, got AUC {mean_auc}");
}
