//! A checkpointed run must continue exactly where it left off.

use logicforge_core::random::{random_circuit, RandomCircuitSpec};
use logicforge_core::seed::stream_rng;
use logicforge_vq::{load_checkpoint, save_checkpoint, CircuitGraph, VqConfig, VqTrainConfig, VqTrainer};

fn corpus(seed: u64, count: usize) -> Vec<CircuitGraph> {
    let mut rng = stream_rng(seed, "vq-resume");
    let spec = RandomCircuitSpec::sized((2, 2), (2, 5), (1, 1));
    (0..count)
        .map(|_| CircuitGraph::from_circuit(&random_circuit(&mut rng, &spec)).unwrap())
        .collect()
}

fn tiny_cfg() -> VqConfig {
    VqConfig {
        embed_dim: 8,
        code_dim: 3,
        codebook_size: 8,
        rounds: 1,
        ffn_dim: 12,
        max_nodes: 16,
        ..Default::default()
    }
}

#[test]
fn two_plus_two_epochs_through_a_checkpoint_equals_four_straight() {
    // target_rec 0 disables early stopping so both runs cover all epochs.
    let tcfg = VqTrainConfig {
        max_epochs: 4,
        max_steps: 10_000,
        target_rec: 0.0,
        seed: 9,
        ..Default::default()
    };
    let graphs = corpus(10, 6);

    let mut straight = VqTrainer::new(tiny_cfg(), tcfg.clone());
    straight.train(&graphs);

    let mut first_half = VqTrainer::new(tiny_cfg(), VqTrainConfig { max_epochs: 2, ..tcfg.clone() });
    first_half.train(&graphs);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("halfway.json");
    save_checkpoint(&path, &first_half).unwrap();

    let mut resumed = load_checkpoint(&path).unwrap();
    assert_eq!(resumed.epoch, 2);
    resumed.cfg.max_epochs = 4;
    resumed.train(&graphs);

    assert_eq!(resumed.step, straight.step, "step counters must agree");
    assert_eq!(resumed.epoch, straight.epoch);
    assert_eq!(resumed.rng, straight.rng, "rng streams must be in the same state");
    for slot in 0..straight.model.params.len() {
        let a = straight.model.params.get(slot);
        let b = resumed.model.params.get(slot);
        assert_eq!(a, b, "parameter {} drifted across the checkpoint", straight.model.params.name(slot));
    }
}
