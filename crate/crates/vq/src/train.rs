//! Minibatch training loop for the circuit tokenizer.

use crate::graph::CircuitGraph;
use crate::model::{QuantizeMode, VqConfig, VqModel};
use crate::quantize::utilization;
use logicforge_autodiff::sample::{gaussian_matrix, gumbel_matrix};
use logicforge_autodiff::{Adam, Tape};
use logicforge_core::seed::stream_rng;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Optimizer and schedule settings. Hashed into checkpoints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VqTrainConfig {
    pub lr: f64,
    pub minibatch: usize,
    pub max_epochs: usize,
    /// Step horizon for the temperature schedule and the overall step cap.
    pub max_steps: usize,
    /// Early-stop threshold on the deterministic evaluation loss.
    pub target_rec: f64,
    pub tau_start: f64,
    pub tau_end: f64,
    pub seed: u64,
}

impl Default for VqTrainConfig {
    fn default() -> Self {
        Self {
            lr: 3e-3,
            minibatch: 8,
            max_epochs: 200,
            max_steps: 2000,
            target_rec: 0.05,
            tau_start: 1.0,
            tau_end: 0.5,
            seed: 0,
        }
    }
}

/// Per-epoch training summary.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub eval_rec: f64,
    pub used_fraction: f64,
    pub perplexity: f64,
    pub revived: usize,
    pub steps: usize,
}

/// Owns the model, optimizer, and training RNG so a run can be checkpointed
/// and resumed bit-for-bit.
#[derive(Debug)]
pub struct VqTrainer {
    pub model: VqModel,
    pub opt: Adam,
    pub rng: ChaCha8Rng,
    pub cfg: VqTrainConfig,
    pub step: usize,
    pub epoch: usize,
}

impl VqTrainer {
    pub fn new(model_cfg: VqConfig, cfg: VqTrainConfig) -> VqTrainer {
        let mut init_rng = stream_rng(cfg.seed, "vq-init");
        let model = VqModel::new(model_cfg, &mut init_rng);
        let opt = Adam::new(cfg.lr, &model.params);
        let rng = stream_rng(cfg.seed, "vq-train");
        VqTrainer { model, opt, rng, cfg, step: 0, epoch: 0 }
    }

    /// Rebuild a trainer from checkpointed pieces.
    pub fn from_parts(
        model: VqModel,
        opt: Adam,
        rng: ChaCha8Rng,
        cfg: VqTrainConfig,
        step: usize,
        epoch: usize,
    ) -> VqTrainer {
        VqTrainer { model, opt, rng, cfg, step, epoch }
    }

    fn temperature_at(&self, step: usize) -> f64 {
        let horizon = self.cfg.max_steps.max(2) - 1;
        let t = (step.min(horizon) as f64) / horizon as f64;
        self.cfg.tau_start * (self.cfg.tau_end / self.cfg.tau_start).powf(t)
    }

    /// One optimizer update on a minibatch; returns the mean training loss.
    pub fn train_step(&mut self, batch: &[&CircuitGraph]) -> f64 {
        assert!(!batch.is_empty(), "empty minibatch");
        let temperature = self.temperature_at(self.step);
        let mut tape = Tape::new();
        let mut totals = Vec::with_capacity(batch.len());
        for graph in batch {
            let noise = gumbel_matrix(&mut self.rng, graph.n, self.model.cfg.codebook_size);
            let (losses, _) = self.model.losses_on_tape(
                &mut tape,
                &self.model.params,
                graph,
                QuantizeMode::StGumbel { noise: &noise, temperature },
            );
            totals.push(losses.total);
        }
        let mut sum = totals[0];
        for &t in &totals[1..] {
            sum = tape.add(sum, t);
        }
        let mean = tape.scale(sum, 1.0 / batch.len() as f64);
        let loss = tape.scalar(mean);
        let grads = tape.backward(mean);
        self.opt.step(&mut self.model.params, &grads);
        self.step += 1;
        loss
    }

    /// Deterministic reconstruction loss and code usage over a dataset.
    pub fn evaluate(&self, graphs: &[CircuitGraph]) -> (f64, Vec<usize>) {
        let mut sum = 0.0;
        let mut all_indices = Vec::new();
        for graph in graphs {
            let mut tape = Tape::new();
            let (losses, q) = self.model.losses_on_tape(
                &mut tape,
                &self.model.params,
                graph,
                QuantizeMode::Nearest,
            );
            sum += tape.scalar(losses.reconstruction);
            all_indices.extend(q.indices);
        }
        (sum / graphs.len().max(1) as f64, all_indices)
    }

    /// Resets codebook entries that no circuit mapped to, seeding them near a
    /// live encoder output so they can win assignments again.
    pub fn revive_dead_codes(&mut self, graphs: &[CircuitGraph], used: &[usize]) -> usize {
        let k = self.model.cfg.codebook_size;
        let mut is_used = vec![false; k];
        for &c in used {
            is_used[c] = true;
        }
        let dead: Vec<usize> = (0..k).filter(|&c| !is_used[c]).collect();
        if dead.is_empty() || graphs.is_empty() {
            return 0;
        }
        let cb_slot = self.model.slot("codebook");
        for &code in &dead {
            let g = self.rng.gen_range(0..graphs.len());
            let graph = &graphs[g];
            let mut tape = Tape::new();
            let z = self.model.encode_on_tape(&mut tape, &self.model.params, graph);
            let row = self.rng.gen_range(0..graph.n);
            let jitter = gaussian_matrix(&mut self.rng, 1, self.model.cfg.code_dim, 0.01);
            let source = tape.value(z).row(row).to_owned();
            let cb = self.model.params.get_mut(cb_slot);
            for d in 0..self.model.cfg.code_dim {
                cb[[code, d]] = source[d] + jitter[[0, d]];
            }
            self.opt.zero_state_rows(cb_slot, &[code]);
        }
        dead.len()
    }

    /// Epoch loop with shuffling, evaluation, early stopping, and revival.
    pub fn train(&mut self, graphs: &[CircuitGraph]) -> Vec<EpochStats> {
        assert!(!graphs.is_empty(), "no training graphs");
        let mut history = Vec::new();
        while self.epoch < self.cfg.max_epochs && self.step < self.cfg.max_steps {
            let mut order: Vec<usize> = (0..graphs.len()).collect();
            order.shuffle(&mut self.rng);
            for chunk in order.chunks(self.cfg.minibatch.max(1)) {
                if self.step >= self.cfg.max_steps {
                    break;
                }
                let batch: Vec<&CircuitGraph> = chunk.iter().map(|&i| &graphs[i]).collect();
                self.train_step(&batch);
            }
            let (eval_rec, indices) = self.evaluate(graphs);
            let (used_fraction, perplexity) =
                utilization(&indices, self.model.cfg.codebook_size);
            let converged = eval_rec < self.cfg.target_rec;
            let revived = if converged { 0 } else { self.revive_dead_codes(graphs, &indices) };
            self.epoch += 1;
            history.push(EpochStats {
                epoch: self.epoch,
                eval_rec,
                used_fraction,
                perplexity,
                revived,
                steps: self.step,
            });
            if converged {
                break;
            }
        }
        history
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use logicforge_core::random::{random_circuit, RandomCircuitSpec};

    fn tiny_cfg() -> VqConfig {
        VqConfig {
            embed_dim: 8,
            code_dim: 3,
            codebook_size: 6,
            rounds: 1,
            ffn_dim: 12,
            max_nodes: 16,
            ..Default::default()
        }
    }

    fn graphs(seed: u64, count: usize) -> Vec<CircuitGraph> {
        let mut rng = stream_rng(seed, "vq-train-test");
        let spec = RandomCircuitSpec::sized((2, 3), (2, 5), (1, 2));
        (0..count)
            .map(|_| CircuitGraph::from_circuit(&random_circuit(&mut rng, &spec)).unwrap())
            .collect()
    }

    #[test]
    fn temperature_interpolates_geometrically() {
        let mut trainer = VqTrainer::new(tiny_cfg(), VqTrainConfig::default());
        trainer.cfg.max_steps = 101;
        assert!((trainer.temperature_at(0) - 1.0).abs() < 1e-12);
        assert!((trainer.temperature_at(100) - 0.5).abs() < 1e-12);
        let mid = trainer.temperature_at(50);
        assert!((mid - 0.5f64.sqrt()).abs() < 1e-12);
        assert!((trainer.temperature_at(10_000) - 0.5).abs() < 1e-12, "clamped past horizon");
    }

    #[test]
    fn training_steps_lower_the_loss_on_a_small_batch() {
        let mut trainer = VqTrainer::new(
            tiny_cfg(),
            VqTrainConfig { seed: 3, ..Default::default() },
        );
        let data = graphs(4, 4);
        let refs: Vec<&CircuitGraph> = data.iter().collect();
        let first = trainer.train_step(&refs);
        for _ in 0..60 {
            trainer.train_step(&refs);
        }
        let last = trainer.train_step(&refs);
        assert!(last.is_finite() && first.is_finite());
        assert!(last < first, "loss should drop: first {first}, last {last}");
        assert_eq!(trainer.step, 62);
    }

    #[test]
    fn revival_rewrites_only_dead_rows() {
        let mut trainer = VqTrainer::new(
            tiny_cfg(),
            VqTrainConfig { seed: 5, ..Default::default() },
        );
        let data = graphs(6, 2);
        let cb_slot = trainer.model.slot("codebook");
        let before = trainer.model.params.get(cb_slot).clone();
        // Pretend codes 1 and 4 are the only live ones.
        let revived = trainer.revive_dead_codes(&data, &[1, 4, 4, 1]);
        assert_eq!(revived, 4);
        let after = trainer.model.params.get(cb_slot);
        for live in [1usize, 4] {
            for d in 0..3 {
                assert_eq!(before[[live, d]], after[[live, d]], "live row {live} must not move");
            }
        }
        for dead in [0usize, 2, 3, 5] {
            let moved = (0..3).any(|d| before[[dead, d]] != after[[dead, d]]);
            assert!(moved, "dead row {dead} should be reseeded");
        }
    }

    #[test]
    fn epoch_history_reports_monotone_step_counts() {
        let mut trainer = VqTrainer::new(
            tiny_cfg(),
            VqTrainConfig { seed: 7, max_epochs: 3, max_steps: 50, ..Default::default() },
        );
        let data = graphs(8, 6);
        let history = trainer.train(&data);
        assert!(!history.is_empty());
        for w in history.windows(2) {
            assert!(w[1].steps >= w[0].steps);
            assert_eq!(w[1].epoch, w[0].epoch + 1);
        }
        let last = history.last().unwrap();
        assert!(last.used_fraction > 0.0 && last.used_fraction <= 1.0);
        assert!(last.perplexity >= 1.0);
    }
}
