//! The graph autoencoder: message-passing encoder, codebook, attention decoder.

use crate::graph::{CircuitGraph, NODE_FEATURES};
use crate::quantize::nearest_codes;
use logicforge_autodiff::sample::gaussian_matrix;
use logicforge_autodiff::{ParamSet, Tape, VarId};
use logicforge_core::{Circuit, CircuitError, NodeKind};
use logicforge_repair::ProbabilityMatrix;
use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum VqError {
    #[error("circuit has {got} nodes but the model was built for at most {max}")]
    TooManyNodes { got: usize, max: usize },
    #[error("checkpoint rejected: {reason}")]
    Checkpoint { reason: String },
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Model hyperparameters. Serialized into checkpoints and hashed so a resumed
/// run cannot silently continue with a different architecture.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VqConfig {
    pub embed_dim: usize,
    pub code_dim: usize,
    pub codebook_size: usize,
    pub rounds: usize,
    pub ffn_dim: usize,
    pub max_nodes: usize,
    /// Cosine similarities are multiplied by this before tempered sampling.
    pub sim_scale: f64,
    /// Weight of the codebook-pull term in the quantization loss.
    pub beta: f64,
    pub bce_clamp: f64,
}

impl Default for VqConfig {
    fn default() -> Self {
        Self {
            embed_dim: 64,
            code_dim: 4,
            codebook_size: 256,
            rounds: 3,
            ffn_dim: 128,
            max_nodes: 64,
            sim_scale: 10.0,
            beta: 0.25,
            bce_clamp: 1e-7,
        }
    }
}

/// How codes are selected during a forward pass.
pub enum QuantizeMode<'a> {
    /// Deterministic nearest code; gradients reach the encoder through the
    /// pass-through estimator only.
    Nearest,
    /// Tempered noisy selection: softmax((sim·scale + noise)/temperature),
    /// with the sampled hard code forwarded and the soft mixture carrying
    /// the gradient.
    StGumbel { noise: &'a Array2<f64>, temperature: f64 },
}

/// Tape variables produced by quantization.
pub struct Quantized {
    /// Decoder input: hard code vectors with a soft gradient path.
    pub z_tilde: VarId,
    /// Normalized encoder outputs.
    pub z_normed: VarId,
    /// Normalized selected codebook rows (hard).
    pub selected: VarId,
    pub indices: Vec<usize>,
    pub zero_rows: Vec<usize>,
}

/// Tape variables for the training objective.
pub struct VqLosses {
    pub reconstruction: VarId,
    pub total: VarId,
    pub edge_probs: VarId,
}

/// Parameter container plus the forward passes.
#[derive(Clone, Debug)]
pub struct VqModel {
    pub cfg: VqConfig,
    pub params: ParamSet,
}

impl VqModel {
    pub fn new(cfg: VqConfig, rng: &mut impl Rng) -> VqModel {
        let d = cfg.embed_dim;
        let dc = cfg.code_dim;
        let std = 0.1;
        let mut p = ParamSet::new();
        p.add("enc.in", gaussian_matrix(rng, NODE_FEATURES, d, std));
        p.add("enc.in_b", Array2::zeros((1, d)));
        for r in 0..cfg.rounds {
            p.add(format!("enc.r{r}.self"), gaussian_matrix(rng, d, d, std));
            p.add(format!("enc.r{r}.in"), gaussian_matrix(rng, d, d, std));
            p.add(format!("enc.r{r}.out"), gaussian_matrix(rng, d, d, std));
            p.add(format!("enc.r{r}.b"), Array2::zeros((1, d)));
        }
        p.add("enc.code", gaussian_matrix(rng, d, dc, std));
        p.add("enc.code_b", Array2::zeros((1, dc)));
        p.add("codebook", gaussian_matrix(rng, cfg.codebook_size, dc, 1.0));
        p.add("dec.up", gaussian_matrix(rng, dc, d, std));
        p.add("dec.up_b", Array2::zeros((1, d)));
        p.add("dec.kind", gaussian_matrix(rng, 3, d, std));
        p.add("dec.pos", gaussian_matrix(rng, cfg.max_nodes, d, std));
        p.add("dec.ln1.g", Array2::ones((1, d)));
        p.add("dec.ln1.b", Array2::zeros((1, d)));
        p.add("dec.wq", gaussian_matrix(rng, d, d, std));
        p.add("dec.wk", gaussian_matrix(rng, d, d, std));
        p.add("dec.wv", gaussian_matrix(rng, d, d, std));
        p.add("dec.wo", gaussian_matrix(rng, d, d, std));
        p.add("dec.ln2.g", Array2::ones((1, d)));
        p.add("dec.ln2.b", Array2::zeros((1, d)));
        p.add("dec.ffn1", gaussian_matrix(rng, d, cfg.ffn_dim, std));
        p.add("dec.ffn1_b", Array2::zeros((1, cfg.ffn_dim)));
        p.add("dec.ffn2", gaussian_matrix(rng, cfg.ffn_dim, d, std));
        p.add("dec.ffn2_b", Array2::zeros((1, d)));
        p.add("dec.f1", gaussian_matrix(rng, d, d, std));
        p.add("dec.f2", gaussian_matrix(rng, d, d, std));
        VqModel { cfg, params: p }
    }

    pub fn slot(&self, name: &str) -> usize {
        self.params.index_of(name).unwrap_or_else(|| panic!("no parameter named {name}"))
    }

    pub fn check_size(&self, n: usize) -> Result<(), VqError> {
        if n > self.cfg.max_nodes {
            return Err(VqError::TooManyNodes { got: n, max: self.cfg.max_nodes });
        }
        Ok(())
    }

    /// Message-passing encoder: features → embedding → `rounds` of
    /// self/fan-in/fan-out mixing → per-node code vectors (N×code_dim).
    pub fn encode_on_tape(
        &self,
        tape: &mut Tape,
        params: &ParamSet,
        graph: &CircuitGraph,
    ) -> VarId {
        let x = tape.constant(graph.features.clone());
        let a = tape.constant(graph.adj.clone());
        let at = tape.constant(graph.adj_t.clone());
        let w_in = tape.param(params, self.slot("enc.in"));
        let b_in = tape.param(params, self.slot("enc.in_b"));
        let mut h = tape.matmul(x, w_in);
        h = tape.add_row(h, b_in);
        for r in 0..self.cfg.rounds {
            let ws = tape.param(params, self.slot(&format!("enc.r{r}.self")));
            let wi = tape.param(params, self.slot(&format!("enc.r{r}.in")));
            let wo = tape.param(params, self.slot(&format!("enc.r{r}.out")));
            let b = tape.param(params, self.slot(&format!("enc.r{r}.b")));
            let hs = tape.matmul(h, ws);
            let from_in = tape.matmul(at, h);
            let hi = tape.matmul(from_in, wi);
            let from_out = tape.matmul(a, h);
            let ho = tape.matmul(from_out, wo);
            let mut sum = tape.add(hs, hi);
            sum = tape.add(sum, ho);
            sum = tape.add_row(sum, b);
            h = tape.relu(sum);
        }
        let w_code = tape.param(params, self.slot("enc.code"));
        let b_code = tape.param(params, self.slot("enc.code_b"));
        let z = tape.matmul(h, w_code);
        tape.add_row(z, b_code)
    }

    /// Snaps encoder outputs to codebook entries; see [`QuantizeMode`].
    pub fn quantize_on_tape(
        &self,
        tape: &mut Tape,
        params: &ParamSet,
        z: VarId,
        mode: QuantizeMode,
    ) -> Quantized {
        let z_normed = tape.l2_normalize_rows(z);
        let cb = tape.param(params, self.slot("codebook"));
        let cb_normed = tape.l2_normalize_rows(cb);
        let (indices, zero_rows) = match &mode {
            QuantizeMode::Nearest => {
                let out = nearest_codes(tape.value(z), params.get(self.slot("codebook")));
                (out.indices, out.zero_rows)
            }
            QuantizeMode::StGumbel { noise, temperature: _ } => {
                let sims = tape.value(z_normed).dot(&tape.value(cb_normed).t());
                let noisy = &(&sims * self.cfg.sim_scale) + *noise;
                let indices = noisy
                    .rows()
                    .into_iter()
                    .map(|row| {
                        let mut best = 0;
                        for k in 1..row.len() {
                            if row[k] > row[best] {
                                best = k;
                            }
                        }
                        best
                    })
                    .collect();
                (indices, Vec::new())
            }
        };
        let selected = tape.gather_rows(cb_normed, &indices);
        let selected_value = tape.value(selected).clone();
        let z_tilde = match mode {
            QuantizeMode::Nearest => tape.straight_through(z_normed, selected_value),
            QuantizeMode::StGumbel { noise, temperature } => {
                let cbt = tape.transpose(cb_normed);
                let sims = tape.matmul(z_normed, cbt);
                let logits = tape.scale(sims, self.cfg.sim_scale);
                let noise_var = tape.constant(noise.clone());
                let noisy = tape.add(logits, noise_var);
                let tempered = tape.scale(noisy, 1.0 / temperature);
                let soft = tape.softmax_rows(tempered);
                let soft_mix = tape.matmul(soft, cb_normed);
                tape.straight_through(soft_mix, selected_value)
            }
        };
        Quantized { z_tilde, z_normed, selected, indices, zero_rows }
    }

    /// Attention decoder from quantized node vectors to edge probabilities
    /// (N×N, sigmoid outputs).
    pub fn decode_on_tape(
        &self,
        tape: &mut Tape,
        params: &ParamSet,
        z_tilde: VarId,
        kind_indices: &[usize],
    ) -> VarId {
        let n = kind_indices.len();
        let d = self.cfg.embed_dim;
        let up = tape.param(params, self.slot("dec.up"));
        let up_b = tape.param(params, self.slot("dec.up_b"));
        let mut x = tape.matmul(z_tilde, up);
        x = tape.add_row(x, up_b);
        let kind_table = tape.param(params, self.slot("dec.kind"));
        let kinds = tape.gather_rows(kind_table, kind_indices);
        x = tape.add(x, kinds);
        let pos_table = tape.param(params, self.slot("dec.pos"));
        let pos_idx: Vec<usize> = (0..n).collect();
        let pos = tape.gather_rows(pos_table, &pos_idx);
        x = tape.add(x, pos);

        // Pre-norm attention block with a residual connection.
        let g1 = tape.param(params, self.slot("dec.ln1.g"));
        let b1 = tape.param(params, self.slot("dec.ln1.b"));
        let normed = tape.layer_norm_rows(x, g1, b1, 1e-5);
        let wq = tape.param(params, self.slot("dec.wq"));
        let wk = tape.param(params, self.slot("dec.wk"));
        let wv = tape.param(params, self.slot("dec.wv"));
        let wo = tape.param(params, self.slot("dec.wo"));
        let q = tape.matmul(normed, wq);
        let k = tape.matmul(normed, wk);
        let v = tape.matmul(normed, wv);
        let kt = tape.transpose(k);
        let scores = tape.matmul(q, kt);
        let scores = tape.scale(scores, 1.0 / (d as f64).sqrt());
        let attn = tape.softmax_rows(scores);
        let mixed = tape.matmul(attn, v);
        let proj = tape.matmul(mixed, wo);
        let x = tape.add(x, proj);

        // Pre-norm feed-forward block with a residual connection.
        let g2 = tape.param(params, self.slot("dec.ln2.g"));
        let b2 = tape.param(params, self.slot("dec.ln2.b"));
        let normed2 = tape.layer_norm_rows(x, g2, b2, 1e-5);
        let w1 = tape.param(params, self.slot("dec.ffn1"));
        let w1b = tape.param(params, self.slot("dec.ffn1_b"));
        let w2 = tape.param(params, self.slot("dec.ffn2"));
        let w2b = tape.param(params, self.slot("dec.ffn2_b"));
        let mut f = tape.matmul(normed2, w1);
        f = tape.add_row(f, w1b);
        f = tape.relu(f);
        f = tape.matmul(f, w2);
        f = tape.add_row(f, w2b);
        let x = tape.add(x, f);

        // Pairwise edge scores from two projections of the node states.
        let f1w = tape.param(params, self.slot("dec.f1"));
        let f2w = tape.param(params, self.slot("dec.f2"));
        let f1 = tape.matmul(x, f1w);
        let f2 = tape.matmul(x, f2w);
        let f2t = tape.transpose(f2);
        let logits = tape.matmul(f1, f2t);
        tape.sigmoid(logits)
    }

    /// Full training objective on one graph.
    pub fn losses_on_tape(
        &self,
        tape: &mut Tape,
        params: &ParamSet,
        graph: &CircuitGraph,
        mode: QuantizeMode,
    ) -> (VqLosses, Quantized) {
        let z = self.encode_on_tape(tape, params, graph);
        let q = self.quantize_on_tape(tape, params, z, mode);
        let probs = self.decode_on_tape(tape, params, q.z_tilde, &graph.kind_indices);
        let rec = tape.bce_mean(probs, &graph.adj, self.cfg.bce_clamp);
        // Encoder-pull: move codes toward their assigned (frozen) entries.
        let frozen_sel = tape.stop_gradient(q.selected);
        let d1 = tape.sub(q.z_normed, frozen_sel);
        let sq1 = tape.mul(d1, d1);
        let commit = tape.mean_all(sq1);
        // Codebook-pull: move entries toward the (frozen) encoder codes.
        let frozen_z = tape.stop_gradient(q.z_normed);
        let d2 = tape.sub(frozen_z, q.selected);
        let sq2 = tape.mul(d2, d2);
        let embed = tape.mean_all(sq2);
        let embed_scaled = tape.scale(embed, self.cfg.beta);
        let partial = tape.add(rec, commit);
        let total = tape.add(partial, embed_scaled);
        (VqLosses { reconstruction: rec, total, edge_probs: probs }, q)
    }

    /// Deterministic reconstruction: returns edge probabilities and the code
    /// sequence.
    pub fn reconstruct(&self, graph: &CircuitGraph) -> Result<(Array2<f64>, Vec<usize>), VqError> {
        self.check_size(graph.n)?;
        let mut tape = Tape::new();
        let (losses, q) =
            self.losses_on_tape(&mut tape, &self.params, graph, QuantizeMode::Nearest);
        Ok((tape.value(losses.edge_probs).clone(), q.indices))
    }

    /// Tokenizes a circuit as codebook indices.
    pub fn encode_codes(&self, circuit: &Circuit) -> Result<Vec<usize>, VqError> {
        let graph = CircuitGraph::from_circuit(circuit)?;
        self.check_size(graph.n)?;
        let mut tape = Tape::new();
        let z = self.encode_on_tape(&mut tape, &self.params, &graph);
        let out = nearest_codes(tape.value(z), self.params.get(self.slot("codebook")));
        Ok(out.indices)
    }

    /// Decodes an explicit code sequence (e.g. from a token generator) into
    /// an edge-probability matrix for the given node kinds.
    pub fn decode_codes(
        &self,
        codes: &[usize],
        kinds: &[NodeKind],
    ) -> Result<ProbabilityMatrix, VqError> {
        assert_eq!(codes.len(), kinds.len(), "one code per node");
        self.check_size(codes.len())?;
        for &c in codes {
            assert!(c < self.cfg.codebook_size, "code {c} out of range");
        }
        let kind_indices: Vec<usize> = kinds.iter().map(|&k| crate::graph::kind_index(k)).collect();
        let mut tape = Tape::new();
        let cb = tape.param(&self.params, self.slot("codebook"));
        let cb_normed = tape.l2_normalize_rows(cb);
        let z_tilde = tape.gather_rows(cb_normed, codes);
        let probs = self.decode_on_tape(&mut tape, &self.params, z_tilde, &kind_indices);
        let data = tape.value(probs).iter().cloned().collect();
        Ok(ProbabilityMatrix::from_vec(codes.len(), data).expect("sigmoid outputs are in range"))
    }
}
